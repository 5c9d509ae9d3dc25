#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cassod/conv.hpp"
#include "cassod/error.hpp"
#include "cassod/parallel.hpp"
#include "cassod/random.hpp"
#include "cassod/tensor.hpp"

namespace cassod {

// Layer kinds shared by the weight/MAC counters and the network description format.
enum class LayerKind {
  Conv,
  DilatedConv,
  DepthwiseConv,
  CassodA,
  CassodCFirst,
  CassodCSecond,
  CassodD,
};

inline constexpr std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::DilatedConv: return "dilated-conv";
    case LayerKind::DepthwiseConv: return "depthwise-conv";
    case LayerKind::CassodA: return "cassod-a";
    case LayerKind::CassodCFirst: return "cassod-c-first";
    case LayerKind::CassodCSecond: return "cassod-c-second";
    case LayerKind::CassodD: return "cassod-d";
  }
  return "?";
}

inline std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (auto kind : {LayerKind::Conv, LayerKind::DilatedConv, LayerKind::DepthwiseConv,
                    LayerKind::CassodA, LayerKind::CassodCFirst, LayerKind::CassodCSecond,
                    LayerKind::CassodD}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

inline constexpr bool is_cassod(LayerKind kind) noexcept {
  return kind == LayerKind::CassodA || kind == LayerKind::CassodCFirst ||
         kind == LayerKind::CassodCSecond || kind == LayerKind::CassodD;
}

enum class Variant { A, CFirst, CSecond, D };

inline constexpr LayerKind layer_kind(Variant v) noexcept {
  switch (v) {
    case Variant::A: return LayerKind::CassodA;
    case Variant::CFirst: return LayerKind::CassodCFirst;
    case Variant::CSecond: return LayerKind::CassodCSecond;
    case Variant::D: return LayerKind::CassodD;
  }
  return LayerKind::CassodA;
}

inline Variant variant_of(LayerKind kind) {
  switch (kind) {
    case LayerKind::CassodA: return Variant::A;
    case LayerKind::CassodCFirst: return Variant::CFirst;
    case LayerKind::CassodCSecond: return Variant::CSecond;
    case LayerKind::CassodD: return Variant::D;
    default: break;
  }
  throw Error(ErrorKind::Semantic, std::string(to_string(kind)) + " is not a CASSOD kind");
}

// ---------------------------------------------------------------------------
// Post-ops: folded batch normalisation (per-channel affine) followed by ReLU.

struct Affine {
  std::vector<double> scale;
  std::vector<double> bias;

  static Affine identity(int channels) {
    return {std::vector<double>(static_cast<std::size_t>(channels), 1.0),
            std::vector<double>(static_cast<std::size_t>(channels), 0.0)};
  }

  // scale in [0.5, 1.5), bias in [-0.5, 0.5)
  static Affine seeded(int channels, std::uint64_t seed, std::uint32_t stream) {
    SeededUniform rng(seed, stream);
    Affine a;
    a.scale.resize(static_cast<std::size_t>(channels));
    a.bias.resize(static_cast<std::size_t>(channels));
    for (auto& s : a.scale) s = 1.0 + 0.5 * rng.next();
    for (auto& b : a.bias) b = 0.5 * rng.next();
    return a;
  }

  friend bool operator==(const Affine&, const Affine&) = default;
};

struct PostOp {
  std::optional<Affine> affine;
  bool relu = false;

  bool is_identity() const noexcept { return !affine && !relu; }
  friend bool operator==(const PostOp&, const PostOp&) = default;
};

inline void apply_post_op(Tensor& t, const PostOp& post) {
  if (post.affine) {
    const auto& a = *post.affine;
    if (a.scale.size() != static_cast<std::size_t>(t.channels()) ||
        a.bias.size() != static_cast<std::size_t>(t.channels())) {
      throw Error(ErrorKind::Shape, "affine post-op channel count mismatch");
    }
    for (int c = 0; c < t.channels(); ++c) {
      for (int i = 0; i < t.height(); ++i) {
        for (int j = 0; j < t.width(); ++j) t(c, i, j) = t(c, i, j) * a.scale[c] + a.bias[c];
      }
    }
  }
  if (post.relu) {
    for (double& v : t.data()) v = v > 0.0 ? v : 0.0;
  }
  detail::require_finite(t.data(), "post-op output");
}

// ---------------------------------------------------------------------------

struct WeightSource {
  enum class Kind { Zeros, Unit, Seeded };
  Kind kind = Kind::Zeros;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;

  static WeightSource zeros() { return {Kind::Zeros}; }
  static WeightSource unit() { return {Kind::Unit}; }
  static WeightSource seeded(std::uint64_t seed, std::uint32_t stream = 0) {
    return {Kind::Seeded, seed, stream};
  }
  friend bool operator==(const WeightSource&, const WeightSource&) = default;
};

inline KernelSet make_kernels(int k, int dilation, int in_channels, int out_channels, bool depthwise,
                              const WeightSource& source, std::uint32_t stream_offset = 0) {
  switch (source.kind) {
    case WeightSource::Kind::Zeros:
      return KernelSet::filled(k, dilation, in_channels, out_channels, depthwise, 0.0);
    case WeightSource::Kind::Unit:
      return KernelSet::filled(k, dilation, in_channels, out_channels, depthwise, 1.0);
    case WeightSource::Kind::Seeded: {
      validate_dilation(k, dilation);
      const auto n = KernelSet::expected_size(k, in_channels, out_channels, depthwise);
      return KernelSet(k, dilation, in_channels, out_channels, depthwise,
                       seeded_uniform(n, source.seed, source.stream + stream_offset));
    }
  }
  throw Error(ErrorKind::Semantic, "unknown weight source");
}

// BN parameters follow the weight source: seeded sources give seeded affines,
// zeros/unit give the identity.
inline Affine make_affine(int channels, const WeightSource& source, std::uint32_t stream_offset) {
  if (source.kind == WeightSource::Kind::Seeded) {
    return Affine::seeded(channels, source.seed, source.stream + stream_offset);
  }
  return Affine::identity(channels);
}

struct PostOpFlags {
  bool bn = false;
  bool relu = false;
  friend bool operator==(const PostOpFlags&, const PostOpFlags&) = default;
};

// Post-op placement inside a cascade.
struct CassodPostOps {
  PostOpFlags after_first;
  PostOpFlags after_second;
};

// Stream layout of a seeded CASSOD module relative to source.stream.
inline constexpr std::uint32_t kLayer1Stream = 0;
inline constexpr std::uint32_t kPost1Stream = 1;
inline constexpr std::uint32_t kLayer2Stream = 2;
inline constexpr std::uint32_t kPost2Stream = 3;

/// Two cascaded 2x2 dilated convolutions sharing one dilation rate.
struct CassodModule {
  Variant variant = Variant::A;
  int c1 = 0;
  int c2 = 0;
  int dilation = 2;
  KernelSet layer1;
  KernelSet layer2;
  PostOp post1;
  PostOp post2;

  int mid_channels() const noexcept { return layer1.out_channels(); }
  std::size_t parameter_count() const noexcept {
    return layer1.parameter_count() + layer2.parameter_count();
  }
};

struct LayerShape {
  int in_channels;
  int out_channels;
  bool depthwise;
};

inline std::array<LayerShape, 2> cassod_layer_shapes(Variant variant, int c1, int c2) {
  switch (variant) {
    case Variant::A: return {{{c1, c1, true}, {c1, c2, false}}};
    case Variant::CFirst: return {{{c1, c1, false}, {c1, c2, false}}};
    case Variant::CSecond: return {{{c1, c2, false}, {c2, c2, false}}};
    case Variant::D: return {{{c1, c1, true}, {c1, c1, true}}};
  }
  return {};
}

inline void validate_cassod_params(Variant variant, int c1, int c2, int dilation) {
  if (dilation < 2 || dilation % 2 != 0) {
    throw Error(ErrorKind::InvalidDilation,
                "D must be even and >= 2 for CASSOD modules, got D=" + std::to_string(dilation));
  }
  if (c1 <= 0 || c2 <= 0) throw Error(ErrorKind::Shape, "channel counts must be positive");
  if (variant == Variant::D && c1 != c2) {
    throw Error(ErrorKind::Shape, "CASSOD-D keeps the channel count: c1=" + std::to_string(c1) +
                                      " c2=" + std::to_string(c2));
  }
}

/// Assembles a module from explicit kernels, checking the variant's layer shapes.
inline CassodModule make_cassod(Variant variant, int c1, int c2, int dilation, KernelSet layer1,
                                KernelSet layer2, PostOp post1 = {}, PostOp post2 = {}) {
  validate_cassod_params(variant, c1, c2, dilation);
  const auto shapes = cassod_layer_shapes(variant, c1, c2);
  const KernelSet* layers[2] = {&layer1, &layer2};
  for (int n = 0; n < 2; ++n) {
    const KernelSet& ks = *layers[n];
    const LayerShape& s = shapes[static_cast<std::size_t>(n)];
    if (ks.base_size() != 2 || ks.dilation() != dilation || ks.in_channels() != s.in_channels ||
        ks.out_channels() != s.out_channels || ks.depthwise() != s.depthwise) {
      throw Error(ErrorKind::Shape, "layer " + std::to_string(n + 1) +
                                        " kernel shape does not match the CASSOD variant");
    }
  }
  return {variant,           c1, c2, dilation, std::move(layer1), std::move(layer2),
          std::move(post1),  std::move(post2)};
}

inline CassodModule build_cassod(Variant variant, int c1, int c2, int dilation,
                                 const CassodPostOps& post_ops, const WeightSource& source) {
  validate_cassod_params(variant, c1, c2, dilation);
  const auto shapes = cassod_layer_shapes(variant, c1, c2);
  auto layer = [&](std::size_t n, std::uint32_t stream) {
    return make_kernels(2, dilation, shapes[n].in_channels, shapes[n].out_channels,
                        shapes[n].depthwise, source, stream);
  };
  auto post = [&](const PostOpFlags& flags, int channels, std::uint32_t stream) {
    PostOp p;
    if (flags.bn) p.affine = make_affine(channels, source, stream);
    p.relu = flags.relu;
    return p;
  };
  return make_cassod(variant, c1, c2, dilation, layer(0, kLayer1Stream), layer(1, kLayer2Stream),
                     post(post_ops.after_first, shapes[0].out_channels, kPost1Stream),
                     post(post_ops.after_second, shapes[1].out_channels, kPost2Stream));
}

inline Tensor forward(const CassodModule& module, const Tensor& input,
                      const ExecOptions& options = {}) {
  if (input.channels() != module.c1) {
    throw Error(ErrorKind::Shape, "CASSOD input has " + std::to_string(input.channels()) +
                                      " channels, module expects " + std::to_string(module.c1));
  }
  Tensor mid = dilated_conv_2x2(input, module.layer1, PaddingSpec::same_zero(), options);
  apply_post_op(mid, module.post1);
  Tensor out = dilated_conv_2x2(mid, module.layer2, PaddingSpec::same_zero(), options);
  apply_post_op(out, module.post2);
  return out;
}

// ---------------------------------------------------------------------------
// Effective 3x3 kernels.

using Plane2x2 = std::array<double, 4>;  // [x][y], row-major
using Plane3x3 = std::array<double, 9>;

/// Single 3x3 kernel (taps {-D, 0, +D}^2) equal to correlating with k1 then k2.
///
/// Tap (x, y) of the first layer and (a, c) of the second land on input offset
/// ((x + a - 1) D, (y + c - 1) D), so e(s, t) = sum_{a+b=s, c+d=t} k1(b, d) k2(a, c):
/// the full discrete convolution of the two planes.
inline Plane3x3 effective_kernel(const Plane2x2& k1, const Plane2x2& k2, int dilation) {
  if (dilation < 2 || dilation % 2 != 0) {
    throw Error(ErrorKind::InvalidDilation, "D must be even, got D=" + std::to_string(dilation));
  }
  Plane3x3 e{};
  for (int a = 0; a < 2; ++a) {
    for (int c = 0; c < 2; ++c) {
      for (int b = 0; b < 2; ++b) {
        for (int d = 0; d < 2; ++d) {
          e[static_cast<std::size_t>((a + b) * 3 + (c + d))] += k1[b * 2 + d] * k2[a * 2 + c];
        }
      }
    }
  }
  return e;
}

inline Plane2x2 kernel_plane_2x2(const KernelSet& ks, int o, int c) {
  return {ks(o, c, 0, 0), ks(o, c, 0, 1), ks(o, c, 1, 0), ks(o, c, 1, 1)};
}

/// 3x3 kernels of dilation D reproducing the bare cascade (post-ops ignored) on
/// interior pixels. Variant D yields a depthwise set; other variants a full set
/// with e(o, c) = sum_m effective_kernel(k1(m, c), k2(o, m)).
inline KernelSet effective_kernels(const CassodModule& module) {
  const KernelSet& l1 = module.layer1;
  const KernelSet& l2 = module.layer2;
  const int mid = l1.out_channels();
  const bool depthwise = l1.depthwise() && l2.depthwise();
  KernelSet e = KernelSet::filled(3, module.dilation, module.c1, module.c2, depthwise, 0.0);
  for (int o = 0; o < module.c2; ++o) {
    for (int c = 0; c < module.c1; ++c) {
      if (depthwise && c != o) continue;
      Plane3x3 sum{};
      for (int m = 0; m < mid; ++m) {
        if (l1.depthwise() && m != c) continue;
        if (l2.depthwise() && m != o) continue;
        const Plane3x3 part =
            effective_kernel(kernel_plane_2x2(l1, m, c), kernel_plane_2x2(l2, o, m), module.dilation);
        for (std::size_t n = 0; n < 9; ++n) sum[n] += part[n];
      }
      for (int x = 0; x < 3; ++x) {
        for (int y = 0; y < 3; ++y) e(o, c, x, y) = sum[static_cast<std::size_t>(x * 3 + y)];
      }
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Counting.

/// Layer description for the weight/MAC formulas. c1/c2 are input/output channels;
/// k is ignored for CASSOD kinds (always 2x2).
struct CountDescriptor {
  LayerKind kind = LayerKind::DilatedConv;
  int k = 3;
  int c1 = 1;
  int c2 = 1;
};

// Closed-form filter-weight counts per layer kind.
inline std::int64_t weight_count(const CountDescriptor& d) {
  const std::int64_t k2 = static_cast<std::int64_t>(d.k) * d.k;
  const std::int64_t c1 = d.c1;
  const std::int64_t c2 = d.c2;
  switch (d.kind) {
    case LayerKind::Conv:
    case LayerKind::DilatedConv: return k2 * c1 * c2;
    case LayerKind::DepthwiseConv: return k2 * c1;
    case LayerKind::CassodA: return 4 * c1 * (1 + c2);
    case LayerKind::CassodCFirst: return 4 * (c1 + c2) * c1;
    case LayerKind::CassodCSecond: return 4 * (c1 + c2) * c2;
    case LayerKind::CassodD: return 4 * (c1 * 2);
  }
  return 0;
}

inline std::int64_t weight_count(const CassodModule& module) {
  return static_cast<std::int64_t>(module.parameter_count());
}

inline std::int64_t mac_count(const CountDescriptor& d, std::int64_t out_height, std::int64_t out_width) {
  return weight_count(d) * out_height * out_width;
}

inline std::int64_t mac_count(const CassodModule& module, std::int64_t out_height, std::int64_t out_width) {
  return weight_count(module) * out_height * out_width;
}

struct TapSpec {
  int k;
  int dilation;
};

/// Side of the input region seen by one output pixel of a stride-1 stack.
inline int receptive_field(std::span<const TapSpec> layers) {
  if (layers.empty()) throw Error(ErrorKind::Semantic, "receptive field of an empty stack");
  int rf = 1;
  for (const auto& l : layers) rf += (l.k - 1) * l.dilation;
  return rf;
}

inline int receptive_field(std::initializer_list<TapSpec> layers) {
  return receptive_field(std::span<const TapSpec>(layers.begin(), layers.size()));
}

}  // namespace cassod
