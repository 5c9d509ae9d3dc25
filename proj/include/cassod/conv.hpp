#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "cassod/error.hpp"
#include "cassod/parallel.hpp"
#include "cassod/tensor.hpp"

namespace cassod {

// Output extent and the input position of output pixel (0, 0)'s filter centre.
struct ConvGeometry {
  int out_height = 0;
  int out_width = 0;
  int center_shift = 0;  // input centre = output index + center_shift
};

inline ConvGeometry conv_geometry(const Tensor& input, const KernelSet& kernels,
                                  const PaddingSpec& padding) {
  if (input.channels() != kernels.in_channels()) {
    throw Error(ErrorKind::Shape, "input has " + std::to_string(input.channels()) +
                                      " channels, kernel expects " +
                                      std::to_string(kernels.in_channels()));
  }
  if (padding.mode == PaddingMode::SameZero) {
    return {input.height(), input.width(), 0};
  }
  const auto offsets = tap_offsets(kernels.base_size(), kernels.dilation());
  const int span = offsets.back() - offsets.front();
  if (span >= input.height() || span >= input.width()) {
    throw Error(ErrorKind::Shape, "filter footprint " + std::to_string(span + 1) +
                                      " larger than input " + std::to_string(input.height()) +
                                      "x" + std::to_string(input.width()));
  }
  return {input.height() - span, input.width() - span, -offsets.front()};
}

/// Brute-force dilated cross-correlation used as the oracle for every other path.
///
/// O(o,i,j) = sum_c sum_{x,y} I(c, i+off[x], j+off[y]) * W(o,c,x,y), with taps from
/// tap_offsets() and zeros outside the input. Depthwise kernels only read channel o.
inline Tensor conv2d_ref(const Tensor& input, const KernelSet& kernels,
                         const PaddingSpec& padding = PaddingSpec::same_zero()) {
  const ConvGeometry geo = conv_geometry(input, kernels, padding);
  const auto offsets = tap_offsets(kernels.base_size(), kernels.dilation());
  const int k = kernels.base_size();
  Tensor out(kernels.out_channels(), geo.out_height, geo.out_width);
  for (int o = 0; o < kernels.out_channels(); ++o) {
    const int c_begin = kernels.depthwise() ? o : 0;
    const int c_end = kernels.depthwise() ? o + 1 : kernels.in_channels();
    for (int i = 0; i < geo.out_height; ++i) {
      for (int j = 0; j < geo.out_width; ++j) {
        double acc = 0.0;
        for (int c = c_begin; c < c_end; ++c) {
          for (int x = 0; x < k; ++x) {
            for (int y = 0; y < k; ++y) {
              acc += input.at_or_zero(c, i + geo.center_shift + offsets[x],
                                      j + geo.center_shift + offsets[y]) *
                     kernels(o, c, x, y);
            }
          }
        }
        out(o, i, j) = acc;
      }
    }
  }
  detail::require_finite(out.data(), "convolution output");
  return out;
}

/// Shift-and-accumulate convolution, parallel over output channels.
///
/// Each output element accumulates its terms in the same (c, x, y) order as
/// conv2d_ref, so the two agree exactly (zero-padding terms are skipped).
inline Tensor conv2d(const Tensor& input, const KernelSet& kernels,
                     const PaddingSpec& padding = PaddingSpec::same_zero(),
                     const ExecOptions& options = {}) {
  const ConvGeometry geo = conv_geometry(input, kernels, padding);
  const auto offsets = tap_offsets(kernels.base_size(), kernels.dilation());
  const int k = kernels.base_size();
  Tensor out(kernels.out_channels(), geo.out_height, geo.out_width);
  const int in_h = input.height();
  const int in_w = input.width();

  parallel_for(kernels.out_channels(), options, [&](int o) {
    const int c_begin = kernels.depthwise() ? o : 0;
    const int c_end = kernels.depthwise() ? o + 1 : kernels.in_channels();
    for (int c = c_begin; c < c_end; ++c) {
      for (int x = 0; x < k; ++x) {
        const int di = geo.center_shift + offsets[x];
        const int i_begin = std::max(0, -di);
        const int i_end = std::min(geo.out_height, in_h - di);
        for (int y = 0; y < k; ++y) {
          const double w = kernels(o, c, x, y);
          const int dj = geo.center_shift + offsets[y];
          const int j_begin = std::max(0, -dj);
          const int j_end = std::min(geo.out_width, in_w - dj);
          for (int i = i_begin; i < i_end; ++i) {
            const double* src = &input.data()[input.index(c, i + di, 0)];
            double* dst = &out.data()[out.index(o, i, 0)];
            for (int j = j_begin; j < j_end; ++j) dst[j] += src[j + dj] * w;
          }
        }
      }
    }
  });
  detail::require_finite(out.data(), "convolution output");
  return out;
}

// 2x2 dilated convolution written directly from
//   O(i,j) = sum_c sum_{x,y in {0,1}} I(c, i - D/2 + x*D, j - D/2 + y*D) * W(c,x,y).
inline Tensor dilated_conv_2x2(const Tensor& input, const KernelSet& kernels,
                               const PaddingSpec& padding = PaddingSpec::same_zero(),
                               const ExecOptions& options = {}) {
  if (kernels.base_size() != 2) {
    throw Error(ErrorKind::UnsupportedFilter,
                "dilated_conv_2x2 needs a 2x2 kernel, got " + std::to_string(kernels.base_size()));
  }
  const int d = kernels.dilation();
  if (d % 2 != 0) {
    throw Error(ErrorKind::InvalidDilation, "D must be even, got D=" + std::to_string(d));
  }
  const ConvGeometry geo = conv_geometry(input, kernels, padding);
  const int half = d / 2;
  Tensor out(kernels.out_channels(), geo.out_height, geo.out_width);
  parallel_for(kernels.out_channels(), options, [&](int o) {
    const int c_begin = kernels.depthwise() ? o : 0;
    const int c_end = kernels.depthwise() ? o + 1 : kernels.in_channels();
    for (int oi = 0; oi < geo.out_height; ++oi) {
      const int i = oi + geo.center_shift;
      for (int oj = 0; oj < geo.out_width; ++oj) {
        const int j = oj + geo.center_shift;
        double acc = 0.0;
        for (int c = c_begin; c < c_end; ++c) {
          acc += input.at_or_zero(c, i - half, j - half) * kernels(o, c, 0, 0);
          acc += input.at_or_zero(c, i - half, j - half + d) * kernels(o, c, 0, 1);
          acc += input.at_or_zero(c, i - half + d, j - half) * kernels(o, c, 1, 0);
          acc += input.at_or_zero(c, i - half + d, j - half + d) * kernels(o, c, 1, 1);
        }
        out(o, oi, oj) = acc;
      }
    }
  });
  detail::require_finite(out.data(), "convolution output");
  return out;
}

}  // namespace cassod
