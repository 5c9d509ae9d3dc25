#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

void add_hw_flags(CLI::App* cmd, cassod::hw::HwConfig& hw) {
  cmd->add_option("--lanes", hw.macs_per_cycle, "Parallel MAC lanes per cycle")->capture_default_str();
  cmd->add_option("--setup", hw.setup_cycles_per_layer, "Setup cycles charged per layer")->capture_default_str();
  cmd->add_option("--clock", hw.clock_hz, "Clock frequency in Hz")->capture_default_str();
  cmd->add_option("--stages", hw.stages, "Pixel Array hierarchical stages (H)")->capture_default_str();
  cmd->add_option("--base-gates", hw.base_gates, "Gate count excluding the Pixel Array")->capture_default_str();
  cmd->add_option("--gates-per-stage", hw.gates_per_stage, "Gate count of one Pixel Array stage")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cassod::cli;

  CLI::App app{"Cascaded 2x2 dilated convolution toolkit"};
  app.require_subcommand(1);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Weights, MACs, receptive field and cycles per layer");
  report_cmd->add_option("network", report.network_path, ".cassod-net file")->required();
  report_cmd->add_option("--csv", report.csv_path, "Write per-layer cycle rows for both modes");
  add_hw_flags(report_cmd, report.hw);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Execute a network on a tensor file");
  run_cmd->add_option("network", run.network_path, ".cassod-net file")->required();
  run_cmd->add_option("input", run.input_path, "Input tensor file")->required();
  run_cmd->add_option("-o,--output", run.output_path, "Output tensor file")->capture_default_str();
  run_cmd->add_option("--golden", run.golden_path, "Golden tensor to compare against");
  run_cmd->add_option("--tolerance", run.tolerance, "Max absolute difference")->capture_default_str();
  run_cmd->add_option("--interior-margin", run.interior_margin, "Ignore this many border pixels when comparing")
      ->capture_default_str();

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Cycles per dilation rate, or gates per stage count");
  sweep_cmd->add_option("--k", sweep.k, "Filter size")->capture_default_str();
  sweep_cmd->add_option("--d-min", sweep.d_min, "Smallest dilation rate")->capture_default_str();
  sweep_cmd->add_option("--d-max", sweep.d_max, "Largest dilation rate")->capture_default_str();
  sweep_cmd->add_option("--channels", sweep.channels, "Input and output channels")->capture_default_str();
  sweep_cmd->add_option("--size", sweep.size, "Feature map height and width")->capture_default_str();
  sweep_cmd->add_option("--cassod", sweep.cassod, "Add a CASSOD replacement column (a, c-first, c-second)");
  sweep_cmd->add_flag("--gates", sweep.gates, "Sweep Pixel Array gate count over H instead");
  sweep_cmd->add_option("--h-max", sweep.h_max, "Largest H for --gates")->capture_default_str();
  sweep_cmd->add_option("--csv", sweep.csv_path, "Write CSV to a file instead of standard output");
  add_hw_flags(sweep_cmd, sweep.hw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*report_cmd) return cmd_report(report, std::cout, std::cerr);
  if (*run_cmd) {
    run.exec = cassod::ExecOptions::from_environment();
    return cmd_run(run, std::cout, std::cerr);
  }
  return cmd_sweep(sweep, std::cout, std::cerr);
}
