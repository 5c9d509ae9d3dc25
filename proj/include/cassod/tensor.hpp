#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cassod/error.hpp"

namespace cassod {

inline constexpr int kMaxFilterSize = 7;

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::NonFinite, std::string(what) + " contains a non-finite value");
    }
  }
}

}  // namespace detail

// C x H x W activations, channel-major then row then column.
class Tensor {
 public:
  Tensor() = default;

  Tensor(int channels, int height, int width)
      : Tensor(channels, height, width,
               std::vector<double>(checked_size(channels, height, width), 0.0)) {}

  Tensor(int channels, int height, int width, std::vector<double> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != checked_size(channels, height, width)) {
      throw Error(ErrorKind::Shape, "tensor data length " + std::to_string(data_.size()) +
                                        " does not match " + std::to_string(channels) + "x" +
                                        std::to_string(height) + "x" + std::to_string(width));
    }
    detail::require_finite(data_, "tensor");
  }

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int c, int i, int j) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + i) * width_ + j;
  }

  double operator()(int c, int i, int j) const noexcept { return data_[index(c, i, j)]; }
  double& operator()(int c, int i, int j) noexcept { return data_[index(c, i, j)]; }

  // Zero outside the plane.
  double at_or_zero(int c, int i, int j) const noexcept {
    if (i < 0 || j < 0 || i >= height_ || j >= width_) return 0.0;
    return data_[index(c, i, j)];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  std::span<const double> plane(int c) const noexcept {
    return std::span<const double>(data_).subspan(index(c, 0, 0),
                                                  static_cast<std::size_t>(height_) * width_);
  }

  bool same_shape(const Tensor& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t checked_size(int channels, int height, int width) {
    if (channels <= 0 || height <= 0 || width <= 0) {
      throw Error(ErrorKind::Shape, "tensor dimensions must be positive");
    }
    return static_cast<std::size_t>(channels) * height * width;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Read-only view of one H x W plane.
struct PlaneView {
  std::span<const double> data;
  int height = 0;
  int width = 0;

  PlaneView() = default;
  PlaneView(std::span<const double> d, int h, int w) : data(d), height(h), width(w) {
    if (data.size() != static_cast<std::size_t>(h) * w) {
      throw Error(ErrorKind::Shape, "plane view size mismatch");
    }
  }
  PlaneView(const Tensor& t, int channel) : PlaneView(t.plane(channel), t.height(), t.width()) {}

  bool contains(int i, int j) const noexcept { return i >= 0 && j >= 0 && i < height && j < width; }
  double at_or_zero(int i, int j) const noexcept {
    return contains(i, j) ? data[static_cast<std::size_t>(i) * width + j] : 0.0;
  }
};

inline void validate_filter_size(int k) {
  if (k < 1 || k > kMaxFilterSize) {
    throw Error(ErrorKind::UnsupportedFilter,
                "filter size " + std::to_string(k) + " outside supported range [1, 7]");
  }
}

inline void validate_dilation(int k, int dilation) {
  validate_filter_size(k);
  if (dilation < 1) {
    throw Error(ErrorKind::InvalidDilation,
                "dilation must be >= 1, got " + std::to_string(dilation));
  }
  if (k == 2 && dilation % 2 != 0) {
    throw Error(ErrorKind::InvalidDilation,
                "D must be even for 2x2 filters, got D=" + std::to_string(dilation));
  }
}

/// One-axis tap offsets of a k-tap filter dilated by D, in ascending order.
///
/// k=2 gives {-D/2, +D/2}; odd k gives k offsets spaced D apart centred on 0.
/// Even k > 2 with odd D has no centred footprint and is shifted towards the
/// negative side by half a pixel (first offset is -floor(D(k-1)/2)).
inline std::vector<int> tap_offsets(int k, int dilation) {
  validate_dilation(k, dilation);
  const int first = -(dilation * (k - 1)) / 2;
  std::vector<int> offsets(static_cast<std::size_t>(k));
  for (int n = 0; n < k; ++n) offsets[static_cast<std::size_t>(n)] = first + n * dilation;
  return offsets;
}

inline int max_tap_offset(int k, int dilation) {
  const auto offsets = tap_offsets(k, dilation);
  return std::max(-offsets.front(), offsets.back());
}

/// Side of the square input footprint covered by one k x k filter with dilation D.
inline constexpr int footprint_side(int k, int dilation) noexcept { return (k - 1) * dilation + 1; }

enum class PaddingMode { SameZero, Valid };

struct PaddingSpec {
  PaddingMode mode = PaddingMode::SameZero;

  static PaddingSpec same_zero() { return {PaddingMode::SameZero}; }
  static PaddingSpec valid() { return {PaddingMode::Valid}; }

  /// Per-side zero pad for a k x k filter with dilation D.
  int pad(int k, int dilation) const {
    return mode == PaddingMode::SameZero ? max_tap_offset(k, dilation) : 0;
  }

  friend bool operator==(const PaddingSpec&, const PaddingSpec&) = default;
};

/// Convolution weights W(o, c, x, y). x indexes rows, y columns.
///
/// Full kernels store out_channels x in_channels x k x k values; depthwise kernels
/// store one k x k plane per channel and require in_channels == out_channels.
class KernelSet {
 public:
  KernelSet() = default;

  KernelSet(int base_size, int dilation, int in_channels, int out_channels, bool depthwise,
            std::vector<double> weights)
      : base_size_(base_size),
        dilation_(dilation),
        in_channels_(in_channels),
        out_channels_(out_channels),
        depthwise_(depthwise),
        weights_(std::move(weights)) {
    validate_dilation(base_size, dilation);
    if (in_channels <= 0 || out_channels <= 0) {
      throw Error(ErrorKind::Shape, "kernel channel counts must be positive");
    }
    if (depthwise && in_channels != out_channels) {
      throw Error(ErrorKind::Shape, "depthwise kernels require in_channels == out_channels");
    }
    if (weights_.size() != expected_size(base_size, in_channels, out_channels, depthwise)) {
      throw Error(ErrorKind::Shape,
                  "kernel weight count " + std::to_string(weights_.size()) + " expected " +
                      std::to_string(expected_size(base_size, in_channels, out_channels, depthwise)));
    }
    detail::require_finite(weights_, "kernel");
  }

  static KernelSet filled(int base_size, int dilation, int in_channels, int out_channels,
                          bool depthwise, double value) {
    validate_filter_size(base_size);
    if (in_channels <= 0 || out_channels <= 0) {
      throw Error(ErrorKind::Shape, "kernel channel counts must be positive");
    }
    return KernelSet(base_size, dilation, in_channels, out_channels, depthwise,
                     std::vector<double>(expected_size(base_size, in_channels, out_channels, depthwise),
                                         value));
  }

  static std::size_t expected_size(int k, int in_channels, int out_channels, bool depthwise) noexcept {
    const auto plane = static_cast<std::size_t>(k) * k;
    return depthwise ? static_cast<std::size_t>(in_channels) * plane
                     : static_cast<std::size_t>(out_channels) * in_channels * plane;
  }

  int base_size() const noexcept { return base_size_; }
  int dilation() const noexcept { return dilation_; }
  int in_channels() const noexcept { return in_channels_; }
  int out_channels() const noexcept { return out_channels_; }
  bool depthwise() const noexcept { return depthwise_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> weights() noexcept { return weights_; }
  std::size_t parameter_count() const noexcept { return weights_.size(); }

  // For depthwise kernels c is ignored: the plane of output channel o is used.
  std::size_t index(int o, int c, int x, int y) const noexcept {
    const auto k = static_cast<std::size_t>(base_size_);
    const auto plane = depthwise_ ? static_cast<std::size_t>(o)
                                  : static_cast<std::size_t>(o) * in_channels_ + c;
    return (plane * k + x) * k + y;
  }

  double operator()(int o, int c, int x, int y) const noexcept { return weights_[index(o, c, x, y)]; }
  double& operator()(int o, int c, int x, int y) noexcept { return weights_[index(o, c, x, y)]; }

  friend bool operator==(const KernelSet&, const KernelSet&) = default;

 private:
  int base_size_ = 1;
  int dilation_ = 1;
  int in_channels_ = 1;
  int out_channels_ = 1;
  bool depthwise_ = false;
  std::vector<double> weights_;
};

}  // namespace cassod
