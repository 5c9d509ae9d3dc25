// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "cassod/cassod.hpp"
#include "oracles.hpp"
#include "properties.hpp"

namespace {

using namespace cassod;
using cassod::testing::direct_gather;
using cassod::testing::random_kernels;
using cassod::testing::random_tensor;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int number, const char* title, const std::function<Outcome()>& check) {
  const auto start = Clock::now();
  Outcome r;
  try {
    r = check();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  if (!r.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1f ms)\n", r.pass ? "PASS" : "FAIL", number, title, r.detail.c_str(), ms);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

hw::HwConfig zero_setup() {
  hw::HwConfig h;
  h.setup_cycles_per_layer = 0;
  return h;
}

hw::ConvLayerSpec dilated3(int d, int c, int size) { return {"dilated-conv", 3, d, c, c, size, size, false}; }

Outcome speedup() {
  const auto layer = dilated3(2, 64, 128);
  const auto base = hw::layer_cycles(layer, zero_setup(), hw::Mode::Baseline).cycles;
  const auto pa = hw::layer_cycles(layer, zero_setup(), hw::Mode::PixelArray).cycles;
  const double ratio = static_cast<double>(base) / static_cast<double>(pa);
  std::ostringstream os;
  os << "baseline/pixel-array = " << format_real(ratio);
  return {base * 9 == pa * 25 && std::abs(ratio - 2.78) <= 0.01, os.str()};
}

Outcome flat_cycles() {
  bool ok = true;
  std::ostringstream os;
  for (const auto& h : {zero_setup(), hw::HwConfig{}}) {
    const auto pa1 = hw::layer_cycles(dilated3(1, 64, 128), h, hw::Mode::PixelArray).cycles;
    for (int d = 1; d <= 3; ++d) ok = ok && hw::layer_cycles(dilated3(d, 64, 128), h, hw::Mode::PixelArray).cycles == pa1;
  }
  const auto b1 = hw::layer_cycles(dilated3(1, 64, 128), zero_setup(), hw::Mode::Baseline).cycles;
  os << "pixel-array flat;";
  for (int d = 1; d <= 3; ++d) {
    const auto b = hw::layer_cycles(dilated3(d, 64, 128), zero_setup(), hw::Mode::Baseline).cycles;
    const std::int64_t taps = (2 * d + 1) * (2 * d + 1);
    ok = ok && b * 9 == b1 * taps;
    os << " baseline(D=" << d << ")=" << b;
  }
  return {ok, os.str()};
}

Outcome weight_ratios() {
  using D = CountDescriptor;
  bool ok = true;
  const std::int64_t a = weight_count(D{LayerKind::CassodA, 2, 64, 64});
  const std::int64_t dil = weight_count(D{LayerKind::DilatedConv, 3, 64, 64});
  ok = ok && a == 4 * 64 * 65 && dil == 36864;
  ok = ok && weight_count(build_cassod(Variant::A, 64, 64, 2, {}, WeightSource::unit())) == a;

  const std::int64_t a_wide = weight_count(D{LayerKind::CassodA, 2, 64, 4096});
  const std::int64_t dil_wide = weight_count(D{LayerKind::DilatedConv, 3, 64, 4096});
  ok = ok && a_wide * 1000 <= dil_wide * 445;

  for (int c : {8, 64, 256}) {
    const std::int64_t full = weight_count(D{LayerKind::DilatedConv, 3, c, c});
    const std::int64_t dw = weight_count(D{LayerKind::DepthwiseConv, 3, c, c});
    for (auto kind : {LayerKind::CassodCFirst, LayerKind::CassodCSecond}) {
      ok = ok && weight_count(D{kind, 2, c, c}) * 9 == full * 8;
      ok = ok && weight_count(build_cassod(variant_of(kind), c, c, 2, {}, WeightSource::unit())) * 9 == full * 8;
    }
    ok = ok && weight_count(D{LayerKind::CassodD, 2, c, c}) * 9 == dw * 8;
    ok = ok && weight_count(build_cassod(Variant::D, c, c, 2, {}, WeightSource::unit())) * 9 == dw * 8;
  }
  std::ostringstream os;
  os << "A@64 = " << a << "/" << dil << " = " << format_real(static_cast<double>(a) / dil) << ", A@4096 = "
     << format_real(static_cast<double>(a_wide) / dil_wide) << ", C and D = 8/9";
  return {ok, os.str()};
}

Outcome table_ratio() {
  constexpr std::int64_t dilated = 23040, cassod_c = 15360, cassod_d = 10912;
  const double share = static_cast<double>(cassod_d) / dilated;
  // 47% to the nearest percent: 46.5 <= 100 * share < 47.5
  const bool ok = cassod_d * 200 >= 93 * dilated && cassod_d * 200 < 95 * dilated && cassod_c * 3 == dilated * 2;
  return {ok, "10912/23040 = " + format_real(share)};
}

Outcome cascade_equivalence() {
  std::mt19937_64 rng(2024);
  const auto start = Clock::now();
  double worst = 0.0;
  const int ds[] = {2, 4, 6};
  for (int n = 0; n < 200; ++n) worst = std::max(worst, cassod::testing::cascade_equivalence_case(rng, ds[n % 3]));
  const double secs = seconds_since(start);
  std::ostringstream os;
  os << "200 cases, max abs diff " << format_real(worst);
  return {worst < 1e-9 && secs < 10.0, os.str()};
}

Outcome gather_equivalence() {
  std::mt19937_64 rng(7);
  const Tensor t = random_tensor(1, 16, 16, rng);
  const PlaneView plane(t, 0);
  const auto start = Clock::now();
  long checked = 0, mismatches = 0;
  const std::pair<int, std::vector<int>> table[] = {{2, {2, 4, 6}}, {3, {1, 2, 3}}};
  for (const auto& [k, dilations] : table) {
    for (int d : dilations) {
      const int r = max_tap_offset(k, d);
      for (int i = r; i < 16 - r; ++i) {
        for (int j = r; j < 16 - r; ++j) {
          ++checked;
          if (hw::pixel_array_gather({}, plane, {i, j}, k, d) != direct_gather(t, 0, i, j, k, d)) ++mismatches;
        }
      }
    }
  }
  const double secs = seconds_since(start);
  std::ostringstream os;
  os << checked << " centres, " << mismatches << " mismatches";
  return {mismatches == 0 && checked > 0 && secs < 1.0, os.str()};
}

Outcome stage_decomposition() {
  const auto start = Clock::now();
  long checked = 0;
  bool ok = true;
  for (int h = 1; h <= 6; ++h) {
    for (int d = 1; d < (1 << h); ++d) {
      const auto x = hw::stage_selection(d, h);
      int sum = 0;
      for (int s = 0; s < h; ++s) {
        ok = ok && (x[static_cast<std::size_t>(s)] == 0 || x[static_cast<std::size_t>(s)] == 1);
        sum += x[static_cast<std::size_t>(s)] << s;
      }
      ok = ok && sum == d && static_cast<int>(x.size()) == h;
      ++checked;
    }
    try {
      hw::stage_selection(1 << h, h);
      ok = false;
    } catch (const Error& e) {
      ok = ok && e.kind() == ErrorKind::UnsupportedDilation;
    }
  }
  const double secs = seconds_since(start);
  return {ok && secs < 1.0, std::to_string(checked) + " dilations reconstructed, D=2^H rejected for H=1..6"};
}

Outcome gate_model() {
  const hw::HwConfig h;
  const auto g3 = hw::gate_count(3, h);
  const auto g0 = hw::gate_count(0, h);
  bool ok = std::abs(g3.pixel_array_gates - 0.5e6) < 1e-6 && std::abs(g3.total_gates - 2.4e6) < 1e-6;
  ok = ok && g3.pixel_array_share >= 0.20 && g3.pixel_array_share <= 0.21;
  const double step = hw::gate_count(1, h).total_gates - g0.total_gates;
  for (int s = 0; s <= 6; ++s) {
    ok = ok && std::abs(hw::gate_count(s, h).total_gates - (g0.total_gates + s * step)) < 1e-6;
  }
  ok = ok && g3.total_gates / g0.total_gates < 3.0;
  std::ostringstream os;
  os << "pixel array " << format_real(g3.pixel_array_gates) << ", total " << format_real(g3.total_gates) << ", share "
     << format_real(g3.pixel_array_share) << ", total(3)/total(0) " << format_real(g3.total_gates / g0.total_gates);
  return {ok, os.str()};
}

// Ten 3x3 dilated layers; the D=2 layers with equal in/out channels are the replaceable ones.
struct SynthLayer {
  int d, in, out;
};
const SynthLayer kSynthetic[] = {{1, 16, 16}, {2, 16, 16}, {3, 16, 32}, {2, 32, 32}, {1, 32, 32},
                                 {3, 32, 64}, {2, 64, 64}, {2, 64, 64}, {1, 64, 64}, {2, 64, 64}};
constexpr int kSynthSize = 64;

std::string synthetic_network(bool replace) {
  std::ostringstream os;
  os << "network synthetic input 16x" << kSynthSize << 'x' << kSynthSize << '\n';
  for (const auto& l : kSynthetic) {
    if (replace && l.d == 2 && l.in == l.out) {
      os << "layer cassod-a d=2 in=" << l.in << " out=" << l.out << " relu\n";
    } else {
      os << "layer dilated-conv k=3 d=" << l.d << " in=" << l.in << " out=" << l.out << " relu\n";
    }
  }
  return os.str();
}

Outcome network_cycles_property() {
  const auto plain = net::parse_network(synthetic_network(false));
  const auto replaced = net::parse_network(synthetic_network(true));
  bool ok = true;

  // setup excluded: each layer shrinks by exactly its tap ratio
  const auto base = net::network_cycles(plain, zero_setup(), hw::Mode::Baseline);
  const auto pa = net::network_cycles(plain, zero_setup(), hw::Mode::PixelArray);
  std::int64_t predicted_saving = 0;
  for (std::size_t n = 0; n < base.layers.size(); ++n) {
    const std::int64_t taps = (2 * kSynthetic[n].d + 1) * (2 * kSynthetic[n].d + 1);
    ok = ok && base.layers[n].cycles * 9 == pa.layers[n].cycles * taps;
    predicted_saving += pa.layers[n].cycles * (taps - 9) / 9;
  }
  ok = ok && base.total_cycles - pa.total_cycles == predicted_saving;

  // the tightest setup bound over the replaced layers
  const hw::HwConfig defaults;
  std::int64_t bound = INT64_MAX;
  for (const auto& l : kSynthetic) {
    if (l.d != 2 || l.in != l.out) continue;
    const std::int64_t c = l.in;
    bound = std::min(bound, (9 * c * c - 4 * c * (1 + c)) * kSynthSize * kSynthSize / defaults.macs_per_cycle);
  }
  std::ostringstream os;
  os << "tap ratios exact, total saving " << predicted_saving << " cycles;";
  for (std::int64_t setup : {std::int64_t{0}, std::int64_t{1000}, bound - 1}) {
    hw::HwConfig h;
    h.setup_cycles_per_layer = setup;
    const auto dilated = net::network_cycles(plain, h, hw::Mode::PixelArray).total_cycles;
    const auto cassod = net::network_cycles(replaced, h, hw::Mode::PixelArray).total_cycles;
    ok = ok && cassod < dilated;
    os << " setup " << setup << ": " << dilated << " -> " << cassod;
  }
  // single smallest layer: at the bound the advantage vanishes
  hw::HwConfig at_bound;
  at_bound.setup_cycles_per_layer = bound;
  const auto one = net::parse_network("network n input 16x64x64\nlayer dilated-conv d=2 in=16 out=16\n");
  const auto one_c = net::parse_network("network n input 16x64x64\nlayer cassod-a d=2 in=16 out=16\n");
  ok = ok && net::network_cycles(one_c, at_bound, hw::Mode::PixelArray).total_cycles >=
                 net::network_cycles(one, at_bound, hw::Mode::PixelArray).total_cycles;
  return {ok, os.str()};
}

Outcome oracle_suite() {
  std::mt19937_64 rng(99);
  double agree = 0.0, naive = 0.0, linear = 0.0, translate = 0.0;
  std::uniform_int_distribution<int> ch(1, 4), sz(4, 16), half(1, 3);
  int depthwise_cases = 0;
  for (int n = 0; n < 500; ++n) {
    const int d = 2 * half(rng);
    const bool dw = n % 3 == 0;
    depthwise_cases += dw;
    const int cin = ch(rng);
    const int cout = dw ? cin : ch(rng);
    const Tensor in = random_tensor(cin, sz(rng), sz(rng), rng);
    const KernelSet ks = random_kernels(2, d, cin, cout, dw, rng);
    const Tensor ref = conv2d_ref(in, ks);
    agree = std::max(agree, cassod::testing::max_rel_diff(dilated_conv_2x2(in, ks), ref));
    const std::vector<double> w(ks.weights().begin(), ks.weights().end());
    naive = std::max(naive, cassod::testing::max_rel_diff(
                                ref, cassod::testing::naive_dilated_correlation(in, w, 2, d, cout, dw)));
  }
  for (int n = 0; n < 200; ++n) linear = std::max(linear, cassod::testing::linearity_case(rng, n % 2 ? 3 : 2));
  for (int n = 0; n < 200; ++n) translate = std::max(translate, cassod::testing::translation_case(rng, n % 2 ? 3 : 2));
  std::ostringstream os;
  os << "500 cases (" << depthwise_cases << " depthwise) rel " << format_real(agree) << ", reference vs naive "
     << format_real(naive) << "; linearity " << format_real(linear) << "; translation " << format_real(translate);
  return {agree <= 1e-12 && naive <= 1e-12 && linear <= 1e-9 && translate <= 1e-12, os.str()};
}

}  // namespace

int main() {
  criterion(1, "speedup 25/9", speedup);
  criterion(2, "flat pixel-array cycles", flat_cycles);
  criterion(3, "weight ratios", weight_ratios);
  criterion(4, "47% weights constant", table_ratio);
  criterion(5, "cascade equivalence", cascade_equivalence);
  criterion(6, "gather equivalence", gather_equivalence);
  criterion(7, "stage decomposition", stage_decomposition);
  criterion(8, "gate model", gate_model);
  criterion(9, "network cycles", network_cycles_property);
  criterion(10, "oracle suite", oracle_suite);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
