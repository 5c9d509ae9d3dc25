#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "oracles.hpp"

namespace cassod::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cassod_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, ReportPrintsPerLayerTable) {
  write_text(path("n.cassod-net"),
             "network n input 64x128x128\n"
             "layer dilated-conv d=2 in=64 out=64\n"
             "layer cassod-a d=2 in=64 out=64 relu\n");
  ReportArgs args;
  args.network_path = path("n.cassod-net");
  args.csv_path = path("cycles.csv");
  ASSERT_EQ(cmd_report(args, out_, err_), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("36864"), std::string::npos);
  EXPECT_NE(out_.str().find("16640"), std::string::npos);
  const auto rows = csv_rows(slurp(path("cycles.csv")));
  // header + 3 lowered layers + total, twice
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0][0], "layer_index");
  EXPECT_EQ(rows[4][0], "total");
  EXPECT_EQ(rows[5][4], "pixel-array");
}

TEST_F(Cli, ReportErrors) {
  ReportArgs args;
  args.network_path = path("missing.cassod-net");
  EXPECT_EQ(cmd_report(args, out_, err_), kExitIo);
  write_text(path("bad.cassod-net"), "network n input 4x8x8\nlayer cassod-a k=2 d=3 in=4 out=4\n");
  args.network_path = path("bad.cassod-net");
  EXPECT_EQ(cmd_report(args, out_, err_), kExitUsage);
  EXPECT_NE(err_.str().find("D must be even"), std::string::npos);
  write_text(path("far.cassod-net"), "network n input 4x8x8\nlayer dilated-conv d=9 in=4 out=4\n");
  args.network_path = path("far.cassod-net");
  EXPECT_EQ(cmd_report(args, out_, err_), kExitUsage);
  EXPECT_NE(err_.str().find("max supported D=7"), std::string::npos);
}

// Golden built independently: a single depthwise 3x3 conv with each channel's effective kernel.
TEST_F(Cli, RunMatchesEffectiveKernelGolden) {
  const int c = 3, d = 4;
  write_text(path("n.cassod-net"), "network n input 3x24x24\nlayer cassod-d d=4 in=3 out=3 weights=seed:9\n");
  std::mt19937_64 rng(31);
  const Tensor x = cassod::testing::random_tensor(c, 24, 24, rng);
  save_tensor(path("x.tensor"), x);
  const auto module = build_cassod(Variant::D, c, c, d, {}, WeightSource::seeded(9));
  KernelSet eff = KernelSet::filled(3, d, c, c, true, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    const auto e = effective_kernel(kernel_plane_2x2(module.layer1, ch, ch), kernel_plane_2x2(module.layer2, ch, ch), d);
    for (int n = 0; n < 9; ++n) eff(ch, ch, n / 3, n % 3) = e[n];
  }
  save_tensor(path("golden.tensor"), conv2d_ref(x, eff));

  RunArgs args;
  args.network_path = path("n.cassod-net");
  args.input_path = path("x.tensor");
  args.output_path = path("y.tensor");
  args.golden_path = path("golden.tensor");
  args.interior_margin = d;
  ASSERT_EQ(cmd_run(args, out_, err_), kExitOk) << err_.str() << out_.str();
  EXPECT_NE(out_.str().find("PASS"), std::string::npos);
  const std::string first = slurp(path("y.tensor"));

  args.output_path = path("y2.tensor");
  args.exec.threads = 4;
  ASSERT_EQ(cmd_run(args, out_, err_), kExitOk);
  EXPECT_EQ(slurp(path("y2.tensor")), first);

  // without the margin the padded border disagrees
  args.interior_margin = 0;
  EXPECT_EQ(cmd_run(args, out_, err_), kExitMismatch);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
}

TEST_F(Cli, RunErrors) {
  write_text(path("n.cassod-net"), "network n input 3x8x8\nlayer conv in=3 out=2 weights=unit\n");
  save_tensor(path("x4.tensor"), Tensor(4, 8, 8));
  RunArgs args;
  args.network_path = path("n.cassod-net");
  args.input_path = path("x4.tensor");
  args.output_path = path("y.tensor");
  EXPECT_EQ(cmd_run(args, out_, err_), kExitUsage);
  EXPECT_FALSE(fs::exists(path("y.tensor")));
  args.input_path = path("absent.tensor");
  EXPECT_EQ(cmd_run(args, out_, err_), kExitIo);
  save_tensor(path("x.tensor"), Tensor(3, 8, 8));
  args.input_path = path("x.tensor");
  args.golden_path = path("absent.tensor");
  EXPECT_EQ(cmd_run(args, out_, err_), kExitIo);
  write_text(path("nan.tensor"), "tensor v1 3 8 8\nnan\n");
  args.golden_path.reset();
  args.input_path = path("nan.tensor");
  EXPECT_EQ(cmd_run(args, out_, err_), kExitUsage);
}

TEST_F(Cli, CycleSweepShape) {
  SweepArgs args;
  args.d_max = 3;
  args.hw.setup_cycles_per_layer = 0;
  ASSERT_EQ(cmd_sweep(args, out_, err_), kExitOk) << err_.str();
  const auto rows = csv_rows(out_.str());
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"D", "mode", "taps", "macs", "cycles"}));
  std::vector<std::string> pa_cycles, base_taps;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    (rows[r][1] == "pixel-array" ? pa_cycles : base_taps).push_back(rows[r][rows[r][1] == "pixel-array" ? 4 : 2]);
  }
  EXPECT_EQ(base_taps, (std::vector<std::string>{"9", "25", "49"}));
  ASSERT_EQ(pa_cycles.size(), 3u);
  EXPECT_EQ(pa_cycles[0], pa_cycles[1]);
  EXPECT_EQ(pa_cycles[1], pa_cycles[2]);
  const double ratio = std::stod(rows[3][4]) / std::stod(rows[4][4]);
  EXPECT_NEAR(ratio, 2.78, 0.01);
}

TEST_F(Cli, CycleSweepSkipsUnsupportedPixelArrayRows) {
  SweepArgs args;
  ASSERT_EQ(cmd_sweep(args, out_, err_), kExitOk);
  const auto rows = csv_rows(out_.str());
  int pa = 0, base = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) (rows[r][1] == "pixel-array" ? pa : base)++;
  EXPECT_EQ(base, 7);
  EXPECT_EQ(pa, 3);
}

TEST_F(Cli, CassodColumn) {
  SweepArgs args;
  args.k = 2;
  args.d_min = 2;
  args.d_max = 6;
  args.cassod = "a";
  ASSERT_EQ(cmd_sweep(args, out_, err_), kExitOk);
  const auto rows = csv_rows(out_.str());
  EXPECT_EQ(rows[0].back(), "cassod_a_cycles");
  ASSERT_EQ(rows.size(), 7u);
  for (std::size_t r = 1; r < rows.size(); ++r) EXPECT_FALSE(rows[r].back().empty());

  out_.str("");
  args.k = 3;
  args.d_min = 1;
  args.d_max = 3;
  ASSERT_EQ(cmd_sweep(args, out_, err_), kExitOk);
  for (const auto& row : csv_rows(out_.str())) {
    if (row[0] == "1" || row[0] == "3") {
      EXPECT_TRUE(row.back().empty());
    }
  }
}

TEST_F(Cli, SweepRangeErrors) {
  SweepArgs args;
  args.d_max = 8;
  EXPECT_EQ(cmd_sweep(args, out_, err_), kExitUsage);
  EXPECT_NE(err_.str().find("max supported D=7"), std::string::npos);
  args.d_max = 3;
  args.d_min = 0;
  EXPECT_EQ(cmd_sweep(args, out_, err_), kExitUsage);
  args.d_min = 3;
  args.d_max = 2;
  EXPECT_EQ(cmd_sweep(args, out_, err_), kExitUsage);
  args = {};
  args.cassod = "b";
  EXPECT_EQ(cmd_sweep(args, out_, err_), kExitUsage);
  args = {};
  args.csv_path = path("no/such/dir/out.csv");
  EXPECT_EQ(cmd_sweep(args, out_, err_), kExitIo);
}

TEST_F(Cli, GateSweepIsAffineInStages) {
  SweepArgs args;
  args.gates = true;
  ASSERT_EQ(cmd_sweep(args, out_, err_), kExitOk);
  const auto rows = csv_rows(out_.str());
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"H", "max_D", "pixel_array_gates", "total_gates", "pixel_array_share"}));
  const double step = std::stod(rows[2][3]) - std::stod(rows[1][3]);
  for (std::size_t r = 2; r < rows.size(); ++r) {
    EXPECT_NEAR(std::stod(rows[r][3]) - std::stod(rows[r - 1][3]), step, 1e-6);
  }
  EXPECT_EQ(rows[4][1], "7");
  EXPECT_NEAR(std::stod(rows[4][3]), 2.4e6, 1e-6);
}

TEST_F(Cli, CsvIsByteDeterministic) {
  SweepArgs args;
  args.cassod = "c-first";
  args.d_max = 6;
  args.csv_path = path("a.csv");
  ASSERT_EQ(cmd_sweep(args, out_, err_), kExitOk);
  args.csv_path = path("b.csv");
  ASSERT_EQ(cmd_sweep(args, out_, err_), kExitOk);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_FALSE(slurp(path("a.csv")).empty());
}

TEST(Compare, MarginAndShapes) {
  Tensor a(1, 4, 4), b(1, 4, 4);
  b(0, 0, 0) = 1.0;
  EXPECT_EQ(compare_tensors(a, b, 0).max_abs_diff, 1.0);
  EXPECT_EQ(compare_tensors(a, b, 1).max_abs_diff, 0.0);
  EXPECT_EQ(compare_tensors(a, b, 1).compared, 4u);
  EXPECT_THROW(compare_tensors(a, Tensor(1, 4, 5), 0), Error);
}

}  // namespace
}  // namespace cassod::cli
