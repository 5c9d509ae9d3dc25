#pragma once

// Subcommand implementations for the `cassod` tool. Kept free of argument
// parsing so the tests can call them directly.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "cassod/cassod.hpp"

namespace cassod::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

inline int exit_code_for(const Error& e) { return e.kind() == ErrorKind::Io ? kExitIo : kExitUsage; }

struct ReportArgs {
  std::string network_path;
  std::optional<std::string> csv_path;
  hw::HwConfig hw;
};

inline int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  try {
    args.hw.validate();
    const auto net = net::load_network(args.network_path);
    const auto analysis = net::analyze(net, args.hw);
    net::print_analysis(out, net, analysis);
    if (args.csv_path) {
      std::ofstream csv(*args.csv_path);
      if (!csv) throw Error(ErrorKind::Io, "cannot write CSV '" + *args.csv_path + "'");
      hw::write_cycle_csv_header(csv);
      hw::write_cycle_csv_rows(csv, net::network_cycles(net, args.hw, hw::Mode::Baseline));
      hw::write_cycle_csv_rows(csv, net::network_cycles(net, args.hw, hw::Mode::PixelArray));
      if (!csv) throw Error(ErrorKind::Io, "write failed for '" + *args.csv_path + "'");
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

struct RunArgs {
  std::string network_path;
  std::string input_path;
  std::string output_path = "output.tensor";
  std::optional<std::string> golden_path;
  double tolerance = 1e-9;
  int interior_margin = 0;
  ExecOptions exec;
};

struct Comparison {
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;
  std::size_t compared = 0;
};

// Compares pixels at least `margin` away from every border.
inline Comparison compare_tensors(const Tensor& actual, const Tensor& expected, int margin) {
  if (!actual.same_shape(expected)) throw Error(ErrorKind::Shape, "golden shape differs from output shape");
  if (margin < 0) throw Error(ErrorKind::Semantic, "interior margin must be non-negative");
  Comparison cmp;
  for (int c = 0; c < actual.channels(); ++c) {
    for (int i = margin; i < actual.height() - margin; ++i) {
      for (int j = margin; j < actual.width() - margin; ++j) {
        const double a = actual(c, i, j);
        const double b = expected(c, i, j);
        const double diff = std::abs(a - b);
        const double scale = std::max(std::abs(a), std::abs(b));
        cmp.max_abs_diff = std::max(cmp.max_abs_diff, diff);
        if (scale > 0.0) cmp.max_rel_diff = std::max(cmp.max_rel_diff, diff / scale);
        ++cmp.compared;
      }
    }
  }
  return cmp;
}

inline int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto net = net::load_network(args.network_path);
    const Tensor input = load_tensor(args.input_path);
    const auto base_dir = std::filesystem::path(args.network_path).parent_path();
    const Tensor output = net::execute(net, input, args.exec, base_dir);
    save_tensor(args.output_path, output);
    out << "output " << args.output_path << ' ' << output.channels() << 'x' << output.height() << 'x'
        << output.width() << '\n';
    if (!args.golden_path) return kExitOk;

    const Tensor golden = load_tensor(*args.golden_path);
    const Comparison cmp = compare_tensors(output, golden, args.interior_margin);
    const bool pass = cmp.max_abs_diff <= args.tolerance;
    out << "max_abs_diff " << format_real(cmp.max_abs_diff) << " max_rel_diff " << format_real(cmp.max_rel_diff)
        << " compared " << cmp.compared << " tolerance " << format_real(args.tolerance) << ' '
        << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitOk : kExitMismatch;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

struct SweepArgs {
  int k = 3;
  int d_min = 1;
  int d_max = 7;
  int channels = 64;
  int size = 128;
  std::optional<std::string> cassod;  // a | c-first | c-second
  bool gates = false;
  int h_max = 6;
  std::optional<std::string> csv_path;
  hw::HwConfig hw;
};

namespace detail {

inline void write_cycle_sweep(const SweepArgs& args, std::ostream& os) {
  std::optional<Variant> variant;
  if (args.cassod) {
    if (*args.cassod == "a") variant = Variant::A;
    else if (*args.cassod == "c-first") variant = Variant::CFirst;
    else if (*args.cassod == "c-second") variant = Variant::CSecond;
    else throw Error(ErrorKind::Semantic, "--cassod must be a, c-first or c-second");
  }
  validate_filter_size(args.k);
  const int max_d = (1 << args.hw.stages) - 1;
  if (args.d_min < 1 || args.d_max < args.d_min || args.d_max > max_d) {
    throw Error(ErrorKind::UnsupportedDilation, "dilation range [" + std::to_string(args.d_min) + ", " +
                                                    std::to_string(args.d_max) + "] invalid; max supported D=" +
                                                    std::to_string(max_d));
  }
  if (args.channels <= 0 || args.size <= 0) throw Error(ErrorKind::Semantic, "channels and size must be positive");

  os << "D,mode,taps,macs,cycles";
  if (variant) os << ",cassod_" << *args.cassod << "_cycles";
  os << '\n';
  int rows = 0;
  for (int d = args.d_min; d <= args.d_max; ++d) {
    if (args.k == 2 && d % 2 != 0) continue;
    const hw::ConvLayerSpec layer{"dilated-conv", args.k, d, args.channels, args.channels, args.size, args.size, false};
    for (auto mode : {hw::Mode::Baseline, hw::Mode::PixelArray}) {
      hw::CycleEntry e;
      try {
        e = hw::layer_cycles(layer, args.hw, mode);
      } catch (const Error&) {
        continue;  // mode cannot serve this (k, D)
      }
      os << d << ',' << hw::to_string(mode) << ',' << e.taps << ',' << e.macs << ',' << e.cycles;
      if (variant) {
        os << ',';
        if (d % 2 == 0) {
          try {
            std::int64_t cycles = 0;
            for (const auto& s : cassod_layer_shapes(*variant, args.channels, args.channels)) {
              const hw::ConvLayerSpec part{"cassod", 2, d, s.in_channels, s.out_channels, args.size, args.size,
                                           s.depthwise};
              cycles += hw::layer_cycles(part, args.hw, mode).cycles;
            }
            os << cycles;
          } catch (const Error&) {
          }
        }
      }
      os << '\n';
      ++rows;
    }
  }
  if (rows == 0) throw Error(ErrorKind::UnsupportedDilation, "no supported dilation in the requested range");
}

inline void write_gate_sweep(const SweepArgs& args, std::ostream& os) {
  if (args.h_max < 0 || args.h_max > 30) throw Error(ErrorKind::Semantic, "--h-max must be in [0, 30]");
  os << "H,max_D,pixel_array_gates,total_gates,pixel_array_share\n";
  for (int h = 0; h <= args.h_max; ++h) {
    const auto g = hw::gate_count(h, args.hw);
    os << h << ',' << ((1 << h) - 1) << ',' << format_real(g.pixel_array_gates) << ','
       << format_real(g.total_gates) << ',' << format_real(g.pixel_array_share) << '\n';
  }
}

}  // namespace detail

inline int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  try {
    args.hw.validate();
    std::ostringstream csv;
    if (args.gates) {
      detail::write_gate_sweep(args, csv);
    } else {
      detail::write_cycle_sweep(args, csv);
    }
    if (args.csv_path) {
      std::ofstream file(*args.csv_path);
      if (!file) throw Error(ErrorKind::Io, "cannot write CSV '" + *args.csv_path + "'");
      file << csv.str();
      if (!file) throw Error(ErrorKind::Io, "write failed for '" + *args.csv_path + "'");
    } else {
      out << csv.str();
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace cassod::cli
