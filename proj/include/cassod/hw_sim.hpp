#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cassod/error.hpp"
#include "cassod/tensor.hpp"

namespace cassod::hw {

// Hierarchical shift-register array: stage h moves a pixel by 0 or 2^h per axis.
struct PixelArrayConfig {
  int stages = 3;
  int array_height = 6;
  int array_width = 6;

  int max_dilation() const noexcept { return stages >= 31 ? INT32_MAX : (1 << stages) - 1; }
  bool supports(int dilation) const noexcept { return dilation >= 1 && dilation <= max_dilation(); }
};

/// Binary decomposition D = sum_h X_h 2^h over H stages, X_h in {0, 1}.
inline std::vector<int> stage_selection(int dilation, int stages) {
  if (stages < 0 || stages > 30) {
    throw Error(ErrorKind::UnsupportedDilation, "stage count must be in [0, 30]");
  }
  const int max_d = (1 << stages) - 1;
  if (dilation < 1 || dilation > max_d) {
    throw Error(ErrorKind::UnsupportedDilation,
                "D=" + std::to_string(dilation) + " cannot be routed with H=" +
                    std::to_string(stages) + " stages; max supported D=" + std::to_string(max_d));
  }
  std::vector<int> selection(static_cast<std::size_t>(stages));
  for (int h = 0; h < stages; ++h) selection[static_cast<std::size_t>(h)] = (dilation >> h) & 1;
  return selection;
}

/// Rejects (k, D) pairs the Pixel Array cannot serve: D outside [1, 2^H - 1], odd D for
/// 2x2 filters, a dilated footprint wider than 7, or dilation on filters larger than 3x3.
inline void validate_pixel_array_layer(int k, int dilation, int stages) {
  validate_dilation(k, dilation);
  stage_selection(dilation, stages);
  if (footprint_side(k, dilation) > kMaxFilterSize) {
    throw Error(ErrorKind::UnsupportedDilation,
                std::to_string(k) + "x" + std::to_string(k) + " filter with D=" +
                    std::to_string(dilation) + " spans " + std::to_string(footprint_side(k, dilation)) +
                    " pixels; the pixel array supports footprints up to 7");
  }
  if (k > 3 && dilation != 1) {
    throw Error(ErrorKind::UnsupportedDilation,
                "dilation is only supported for 2x2 and 3x3 filters, got " + std::to_string(k) + "x" +
                    std::to_string(k) + " with D=" + std::to_string(dilation));
  }
}

// Functional model of the array: a window of pixel buffers anchored in the
// (zero-padded) plane. Each stage either passes the buffers through or shifts
// them by 2^h along one axis; buffers that shift in from beyond the array edge
// are refilled from pixel memory.
class PixelArray {
 public:
  enum class Axis { Rows, Cols };

  PixelArray(const PixelArrayConfig& config, PlaneView memory)
      : config_(config), memory_(memory) {
    if (config.array_height <= 0 || config.array_width <= 0) {
      throw Error(ErrorKind::Shape, "pixel array extent must be positive");
    }
    buffers_.resize(static_cast<std::size_t>(config.array_height) * config.array_width);
  }

  void load(int row, int col) {
    anchor_row_ = row;
    anchor_col_ = col;
    for (int r = 0; r < config_.array_height; ++r) {
      for (int c = 0; c < config_.array_width; ++c) buffer(r, c) = memory_.at_or_zero(row + r, col + c);
    }
  }

  // Stages fire from H-1 down to 0.
  void route(Axis axis, int dilation) {
    const auto selection = stage_selection(dilation, config_.stages);
    for (int h = config_.stages - 1; h >= 0; --h) {
      if (selection[static_cast<std::size_t>(h)]) shift(axis, 1 << h);
    }
  }

  double head() const noexcept { return buffers_[0]; }
  int anchor_row() const noexcept { return anchor_row_; }
  int anchor_col() const noexcept { return anchor_col_; }
  std::span<const double> buffers() const noexcept { return buffers_; }

 private:
  double& buffer(int r, int c) { return buffers_[static_cast<std::size_t>(r) * config_.array_width + c]; }

  void shift(Axis axis, int amount) {
    const int h = config_.array_height;
    const int w = config_.array_width;
    std::vector<double> next(buffers_.size());
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const int sr = axis == Axis::Rows ? r + amount : r;
        const int sc = axis == Axis::Cols ? c + amount : c;
        next[static_cast<std::size_t>(r) * w + c] =
            (sr < h && sc < w) ? buffers_[static_cast<std::size_t>(sr) * w + sc]
                               : memory_.at_or_zero(anchor_row_ + sr, anchor_col_ + sc);
      }
    }
    buffers_ = std::move(next);
    (axis == Axis::Rows ? anchor_row_ : anchor_col_) += amount;
  }

  PixelArrayConfig config_;
  PlaneView memory_;
  std::vector<double> buffers_;
  int anchor_row_ = 0;
  int anchor_col_ = 0;
};

/// k x k window (row-major) of the taps around `center`, produced by routing the
/// plane through the Pixel Array. Pixels outside the plane read as zero.
inline std::vector<double> pixel_array_gather(const PixelArrayConfig& config, PlaneView plane,
                                              std::pair<int, int> center, int k, int dilation) {
  validate_pixel_array_layer(k, dilation, config.stages);
  const auto [ci, cj] = center;
  if (!plane.contains(ci, cj)) {
    throw Error(ErrorKind::Shape, "gather centre (" + std::to_string(ci) + ", " + std::to_string(cj) +
                                      ") outside " + std::to_string(plane.height) + "x" +
                                      std::to_string(plane.width) + " plane");
  }
  const int first = tap_offsets(k, dilation).front();
  PixelArray array(config, plane);
  array.load(ci + first, cj + first);

  std::vector<double> window(static_cast<std::size_t>(k) * k);
  for (int x = 0; x < k; ++x) {
    if (x > 0) {
      array.load(array.anchor_row(), cj + first);
      array.route(PixelArray::Axis::Rows, dilation);
    }
    for (int y = 0; y < k; ++y) {
      if (y > 0) array.route(PixelArray::Axis::Cols, dilation);
      window[static_cast<std::size_t>(x) * k + y] = array.head();
    }
  }
  return window;
}

// ---------------------------------------------------------------------------
// Cost models.

struct HwConfig {
  std::int64_t macs_per_cycle = 512;
  std::int64_t setup_cycles_per_layer = 1000;
  double clock_hz = 400e6;
  double base_gates = 1.9e6;
  double gates_per_stage = 0.5e6 / 3.0;
  int stages = 3;

  // 2 operations per MAC.
  double peak_gops() const noexcept {
    return static_cast<double>(macs_per_cycle) * 2.0 * clock_hz / 1e9;
  }

  void validate() const {
    if (macs_per_cycle <= 0 || setup_cycles_per_layer < 0 || !(clock_hz > 0.0) ||
        !std::isfinite(clock_hz) || !(base_gates > 0.0) || !(gates_per_stage > 0.0) || stages < 0 ||
        stages > 30) {
      throw Error(ErrorKind::Semantic, "invalid hardware configuration");
    }
  }
};

enum class Mode { Baseline, PixelArray };

inline constexpr std::string_view to_string(Mode mode) {
  return mode == Mode::Baseline ? "baseline" : "pixel-array";
}

// One convolution layer as seen by the cost model.
struct ConvLayerSpec {
  std::string kind = "dilated-conv";
  int k = 3;
  int dilation = 1;
  int in_channels = 1;
  int out_channels = 1;
  int out_height = 1;
  int out_width = 1;
  bool depthwise = false;
};

struct CycleEntry {
  int layer_index = 0;
  std::string kind;
  int k = 0;
  int dilation = 0;
  Mode mode = Mode::Baseline;
  std::int64_t taps = 0;  // taps per output element
  std::int64_t macs = 0;
  std::int64_t cycles = 0;
  bool uses_pixel_array = false;  // pixel-array mode skipped zero taps on this layer
};

struct CycleReport {
  Mode mode = Mode::Baseline;
  std::vector<CycleEntry> layers;
  std::int64_t total_taps = 0;
  std::int64_t total_macs = 0;
  std::int64_t total_cycles = 0;
  double fps = 0.0;
};

inline std::int64_t taps_per_output(int k, int dilation, Mode mode) {
  const std::int64_t side = mode == Mode::PixelArray ? k : footprint_side(k, dilation);
  return side * side;
}

/// Cycles for one layer: ceil(taps * channel product * pixels / lanes) + setup.
///
/// Baseline hardware runs the zero-stuffed ((k-1)D+1)^2 filter; with the Pixel Array
/// only the k^2 real taps are processed, independent of D.
inline CycleEntry layer_cycles(const ConvLayerSpec& layer, const HwConfig& hw, Mode mode) {
  hw.validate();
  if (layer.in_channels <= 0 || layer.out_channels <= 0 || layer.out_height <= 0 || layer.out_width <= 0) {
    throw Error(ErrorKind::Shape, "layer dimensions must be positive");
  }
  if (layer.depthwise && layer.in_channels != layer.out_channels) {
    throw Error(ErrorKind::Shape, "depthwise layer needs in == out channels");
  }
  if (mode == Mode::PixelArray) {
    validate_pixel_array_layer(layer.k, layer.dilation, hw.stages);
  } else {
    validate_dilation(layer.k, layer.dilation);
  }
  CycleEntry e;
  e.kind = layer.kind;
  e.k = layer.k;
  e.dilation = layer.dilation;
  e.mode = mode;
  e.taps = taps_per_output(layer.k, layer.dilation, mode);
  const std::int64_t channel_product = layer.depthwise
                                           ? static_cast<std::int64_t>(layer.in_channels)
                                           : static_cast<std::int64_t>(layer.in_channels) * layer.out_channels;
  e.macs = e.taps * channel_product * layer.out_height * layer.out_width;
  e.cycles = (e.macs + hw.macs_per_cycle - 1) / hw.macs_per_cycle + hw.setup_cycles_per_layer;
  e.uses_pixel_array = mode == Mode::PixelArray && e.taps < taps_per_output(layer.k, layer.dilation, Mode::Baseline);
  return e;
}

inline CycleReport network_cycles(std::span<const ConvLayerSpec> layers, const HwConfig& hw, Mode mode) {
  if (layers.empty()) throw Error(ErrorKind::Semantic, "network has no layers");
  CycleReport report;
  report.mode = mode;
  for (std::size_t n = 0; n < layers.size(); ++n) {
    CycleEntry e;
    try {
      e = layer_cycles(layers[n], hw, mode);
    } catch (const Error& err) {
      throw Error(err.kind(), "layer " + std::to_string(n) + ": " + err.what());
    }
    e.layer_index = static_cast<int>(n);
    report.total_taps += e.taps;
    report.total_macs += e.macs;
    report.total_cycles += e.cycles;
    report.layers.push_back(std::move(e));
  }
  report.fps = hw.clock_hz / static_cast<double>(report.total_cycles);
  return report;
}

struct GateReport {
  double pixel_array_gates = 0.0;
  double total_gates = 0.0;
  double pixel_array_share = 0.0;
};

// Linear in H: each stage costs the same.
inline GateReport gate_count(int stages, const HwConfig& hw) {
  if (stages < 0) throw Error(ErrorKind::Semantic, "stage count must be non-negative");
  GateReport r;
  r.pixel_array_gates = stages * hw.gates_per_stage;
  r.total_gates = hw.base_gates + r.pixel_array_gates;
  r.pixel_array_share = r.pixel_array_gates / r.total_gates;
  return r;
}

inline void write_cycle_csv_header(std::ostream& os) {
  os << "layer_index,kind,k,D,mode,taps,macs,cycles\n";
}

inline void write_cycle_csv_rows(std::ostream& os, const CycleReport& report) {
  for (const auto& e : report.layers) {
    os << e.layer_index << ',' << e.kind << ',' << e.k << ',' << e.dilation << ','
       << to_string(e.mode) << ',' << e.taps << ',' << e.macs << ',' << e.cycles << '\n';
  }
  os << "total,,,," << to_string(report.mode) << ',' << report.total_taps << ','
     << report.total_macs << ',' << report.total_cycles << '\n';
}

inline void write_cycle_csv(std::ostream& os, const CycleReport& report) {
  write_cycle_csv_header(os);
  write_cycle_csv_rows(os, report);
}

}  // namespace cassod::hw
