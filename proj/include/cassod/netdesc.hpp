#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cassod/conv.hpp"
#include "cassod/error.hpp"
#include "cassod/hw_sim.hpp"
#include "cassod/module.hpp"
#include "cassod/parallel.hpp"
#include "cassod/tensor.hpp"
#include "cassod/tensor_io.hpp"

namespace cassod::net {

// .cassod-net format, one statement per line, '#' starts a comment:
//
//   network <name> input <C>x<H>x<W>
//   layer <kind> [k=<n>] [d=<n>] in=<n> out=<n> [bn] [relu] [post=inner|outer|both]
//         [weights=zeros|unit|seed:<n>[@<stream>]|file:<path>[@<offset>]]
//
// k defaults to 2 for cassod-* kinds and 3 otherwise; d defaults to 2 for
// cassod-* kinds and 1 otherwise. post= places bn/relu inside a CASSOD cascade:
// inner (after the first 2x2 layer, default), outer (after the second) or both.

class NetError : public Error {
 public:
  NetError(ErrorKind kind, const std::string& message, int line, int column = 0, int layer_index = -1)
      : Error(kind, decorate(message, line, column, layer_index)),
        line_(line),
        column_(column),
        layer_index_(layer_index) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  int layer_index() const noexcept { return layer_index_; }

 private:
  static std::string decorate(const std::string& message, int line, int column, int layer_index) {
    std::string prefix;
    if (line > 0) prefix += "line " + std::to_string(line);
    if (column > 0) prefix += ", column " + std::to_string(column);
    if (layer_index >= 0) prefix += (prefix.empty() ? "" : ", ") + std::string("layer ") + std::to_string(layer_index);
    return prefix.empty() ? message : prefix + ": " + message;
  }

  int line_;
  int column_;
  int layer_index_;
};

struct LayerWeights {
  enum class Kind { Zeros, Unit, Seeded, File };
  Kind kind = Kind::Zeros;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  std::string path;
  std::size_t offset = 0;

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

enum class PostPlacement { Inner, Outer, Both };

inline constexpr std::string_view to_string(PostPlacement p) {
  switch (p) {
    case PostPlacement::Inner: return "inner";
    case PostPlacement::Outer: return "outer";
    case PostPlacement::Both: return "both";
  }
  return "?";
}

struct LayerDescriptor {
  LayerKind kind = LayerKind::DilatedConv;
  int k = 3;
  int dilation = 1;
  int in_channels = 1;
  int out_channels = 1;
  PostOpFlags post;
  PostPlacement placement = PostPlacement::Inner;
  LayerWeights weights;
  int line = 0;  // source line, 0 when synthesised; not part of equality

  bool depthwise() const noexcept { return kind == LayerKind::DepthwiseConv; }

  friend bool operator==(const LayerDescriptor& a, const LayerDescriptor& b) {
    return a.kind == b.kind && a.k == b.k && a.dilation == b.dilation &&
           a.in_channels == b.in_channels && a.out_channels == b.out_channels && a.post == b.post &&
           a.placement == b.placement && a.weights == b.weights;
  }
};

struct InputShape {
  int channels = 1;
  int height = 1;
  int width = 1;
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

struct NetworkDescriptor {
  std::string name;
  InputShape input;
  std::vector<LayerDescriptor> layers;

  friend bool operator==(const NetworkDescriptor&, const NetworkDescriptor&) = default;
};

// ---------------------------------------------------------------------------
// Validation

inline void validate_layer(const LayerDescriptor& l, int index) {
  auto fail = [&](ErrorKind kind, const std::string& msg) { throw NetError(kind, msg, l.line, 0, index); };
  if (l.in_channels <= 0 || l.out_channels <= 0) fail(ErrorKind::Semantic, "channel counts must be positive");
  if (l.k < 1 || l.k > kMaxFilterSize) {
    fail(ErrorKind::UnsupportedFilter, "filter size " + std::to_string(l.k) + " outside [1, 7]");
  }
  if (l.dilation < 1) fail(ErrorKind::InvalidDilation, "dilation must be >= 1");
  if (is_cassod(l.kind)) {
    if (l.k != 2) fail(ErrorKind::Semantic, std::string(to_string(l.kind)) + " layers are built from 2x2 filters (k=2)");
    if (l.dilation % 2 != 0) {
      fail(ErrorKind::InvalidDilation, "D must be even for " + std::string(to_string(l.kind)) +
                                           ", got D=" + std::to_string(l.dilation));
    }
    if (l.kind == LayerKind::CassodD && l.in_channels != l.out_channels) {
      fail(ErrorKind::Semantic, "cassod-d requires out == in");
    }
  } else {
    if (l.k == 2 && l.dilation % 2 != 0) {
      fail(ErrorKind::InvalidDilation, "D must be even for 2x2 filters, got D=" + std::to_string(l.dilation));
    }
    if (l.kind == LayerKind::Conv && l.dilation != 1) fail(ErrorKind::Semantic, "conv layers have d=1; use dilated-conv");
    if (l.kind == LayerKind::DepthwiseConv && l.in_channels != l.out_channels) {
      fail(ErrorKind::Semantic, "depthwise-conv requires out == in");
    }
    if (l.placement != PostPlacement::Inner) fail(ErrorKind::Semantic, "post= only applies to cassod-* layers");
  }
}

inline void validate_network(const NetworkDescriptor& n) {
  if (n.input.channels <= 0 || n.input.height <= 0 || n.input.width <= 0) {
    throw NetError(ErrorKind::Semantic, "input shape must be positive", 0);
  }
  if (n.layers.empty()) throw NetError(ErrorKind::Semantic, "network has no layers", 0);
  int channels = n.input.channels;
  for (std::size_t i = 0; i < n.layers.size(); ++i) {
    const auto& l = n.layers[i];
    validate_layer(l, static_cast<int>(i));
    if (l.in_channels != channels) {
      throw NetError(ErrorKind::Semantic,
                     "channel chain mismatch: in=" + std::to_string(l.in_channels) +
                         " but previous output has " + std::to_string(channels) + " channels",
                     l.line, 0, static_cast<int>(i));
    }
    channels = l.out_channels;
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct Token {
  std::string_view text;
  int column;  // 1-based
};

inline std::vector<Token> tokenize(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
    tokens.push_back({line.substr(start, pos - start), static_cast<int>(start) + 1});
  }
  return tokens;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline LayerWeights parse_weights(std::string_view v, int line, int column) {
  auto bad = [&](const std::string& msg) -> LayerWeights { throw NetError(ErrorKind::Syntax, msg, line, column); };
  LayerWeights w;
  if (v == "zeros") return w;
  if (v == "unit") {
    w.kind = LayerWeights::Kind::Unit;
    return w;
  }
  if (v.starts_with("seed:")) {
    auto body = v.substr(5);
    std::string_view stream_part;
    if (auto at = body.find('@'); at != std::string_view::npos) {
      stream_part = body.substr(at + 1);
      body = body.substr(0, at);
    }
    const auto seed = parse_int<std::uint64_t>(body);
    if (!seed) return bad("bad seed '" + std::string(body) + "'");
    w.kind = LayerWeights::Kind::Seeded;
    w.seed = *seed;
    if (!stream_part.empty()) {
      const auto stream = parse_int<std::uint32_t>(stream_part);
      if (!stream) return bad("bad seed stream '" + std::string(stream_part) + "'");
      w.stream = *stream;
    }
    return w;
  }
  if (v.starts_with("file:")) {
    auto body = v.substr(5);
    w.kind = LayerWeights::Kind::File;
    if (auto at = body.rfind('@'); at != std::string_view::npos) {
      const auto offset = parse_int<std::size_t>(body.substr(at + 1));
      if (!offset) return bad("bad file offset '" + std::string(body.substr(at + 1)) + "'");
      w.offset = *offset;
      body = body.substr(0, at);
    }
    if (body.empty()) return bad("empty weight file path");
    w.path = std::string(body);
    return w;
  }
  return bad("unknown weight source '" + std::string(v) + "'");
}

inline LayerDescriptor parse_layer(const std::vector<Token>& tokens, int line) {
  if (tokens.size() < 2) throw NetError(ErrorKind::Syntax, "layer needs a kind", line, tokens[0].column);
  const auto kind = parse_layer_kind(tokens[1].text);
  if (!kind) {
    throw NetError(ErrorKind::Syntax, "unknown layer kind '" + std::string(tokens[1].text) + "'", line,
                   tokens[1].column);
  }
  LayerDescriptor l;
  l.kind = *kind;
  l.line = line;
  l.k = is_cassod(*kind) ? 2 : 3;
  l.dilation = is_cassod(*kind) ? 2 : 1;
  bool seen_k = false, seen_d = false, seen_in = false, seen_out = false, seen_bn = false,
       seen_relu = false, seen_post = false, seen_weights = false;

  auto once = [&](bool& seen, const Token& t, std::string_view key) {
    if (seen) throw NetError(ErrorKind::Syntax, "duplicate key '" + std::string(key) + "'", line, t.column);
    seen = true;
  };
  auto int_value = [&](const Token& t, std::string_view value) {
    const auto v = parse_int<int>(value);
    if (!v) throw NetError(ErrorKind::Syntax, "expected an integer in '" + std::string(t.text) + "'", line, t.column);
    return *v;
  };

  for (std::size_t n = 2; n < tokens.size(); ++n) {
    const Token& t = tokens[n];
    const auto eq = t.text.find('=');
    if (eq == std::string_view::npos) {
      if (t.text == "bn") {
        once(seen_bn, t, "bn");
        l.post.bn = true;
      } else if (t.text == "relu") {
        once(seen_relu, t, "relu");
        l.post.relu = true;
      } else {
        throw NetError(ErrorKind::Syntax, "unknown flag '" + std::string(t.text) + "'", line, t.column);
      }
      continue;
    }
    const auto key = t.text.substr(0, eq);
    const auto value = t.text.substr(eq + 1);
    const int value_column = t.column + static_cast<int>(eq) + 1;
    if (key == "k") {
      once(seen_k, t, key);
      l.k = int_value(t, value);
    } else if (key == "d") {
      once(seen_d, t, key);
      l.dilation = int_value(t, value);
    } else if (key == "in") {
      once(seen_in, t, key);
      l.in_channels = int_value(t, value);
    } else if (key == "out") {
      once(seen_out, t, key);
      l.out_channels = int_value(t, value);
    } else if (key == "weights") {
      once(seen_weights, t, key);
      l.weights = parse_weights(value, line, value_column);
    } else if (key == "post") {
      once(seen_post, t, key);
      if (value == "inner") l.placement = PostPlacement::Inner;
      else if (value == "outer") l.placement = PostPlacement::Outer;
      else if (value == "both") l.placement = PostPlacement::Both;
      else throw NetError(ErrorKind::Syntax, "post must be inner, outer or both", line, value_column);
    } else {
      throw NetError(ErrorKind::Syntax, "unknown key '" + std::string(key) + "'", line, t.column);
    }
  }
  if (!seen_in) throw NetError(ErrorKind::Syntax, "layer is missing in=", line, tokens[0].column);
  if (!seen_out) throw NetError(ErrorKind::Syntax, "layer is missing out=", line, tokens[0].column);
  return l;
}

inline InputShape parse_shape(const Token& t, int line) {
  InputShape s;
  const auto x1 = t.text.find('x');
  const auto x2 = x1 == std::string_view::npos ? x1 : t.text.find('x', x1 + 1);
  std::optional<int> c, h, w;
  if (x2 != std::string_view::npos) {
    c = parse_int<int>(t.text.substr(0, x1));
    h = parse_int<int>(t.text.substr(x1 + 1, x2 - x1 - 1));
    w = parse_int<int>(t.text.substr(x2 + 1));
  }
  if (!c || !h || !w || *c <= 0 || *h <= 0 || *w <= 0) {
    throw NetError(ErrorKind::Syntax, "input shape must be <C>x<H>x<W> with positive sizes", line, t.column);
  }
  s.channels = *c;
  s.height = *h;
  s.width = *w;
  return s;
}

}  // namespace detail

/// Parses and validates a network description. Errors carry the line (and column
/// or layer index) of the first problem found.
inline NetworkDescriptor parse_network(std::string_view text) {
  NetworkDescriptor net;
  bool have_header = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tokens = detail::tokenize(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto head = tokens[0].text;
    if (head == "network" || head == "network-v1") {
      if (have_header) throw NetError(ErrorKind::Syntax, "duplicate network header", line_no, tokens[0].column);
      if (tokens.size() != 4 || tokens[2].text != "input") {
        throw NetError(ErrorKind::Syntax, "header must be 'network <name> input <C>x<H>x<W>'", line_no,
                       tokens[0].column);
      }
      net.name = std::string(tokens[1].text);
      net.input = detail::parse_shape(tokens[3], line_no);
      have_header = true;
    } else if (head == "layer") {
      if (!have_header) {
        throw NetError(ErrorKind::Syntax, "layer before the network header", line_no, tokens[0].column);
      }
      net.layers.push_back(detail::parse_layer(tokens, line_no));
    } else {
      throw NetError(ErrorKind::Syntax, "unknown statement '" + std::string(head) + "'", line_no,
                     tokens[0].column);
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw NetError(ErrorKind::Syntax, "missing network header", line_no);
  validate_network(net);
  return net;
}

inline NetworkDescriptor load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open network file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

inline std::string format_weights(const LayerWeights& w) {
  switch (w.kind) {
    case LayerWeights::Kind::Zeros: return "zeros";
    case LayerWeights::Kind::Unit: return "unit";
    case LayerWeights::Kind::Seeded:
      return "seed:" + std::to_string(w.seed) + (w.stream ? "@" + std::to_string(w.stream) : "");
    case LayerWeights::Kind::File:
      return "file:" + w.path + (w.offset ? "@" + std::to_string(w.offset) : "");
  }
  return "zeros";
}

// Canonical text form; every key is written out.
inline std::string print_network(const NetworkDescriptor& net) {
  std::ostringstream os;
  os << "network " << net.name << " input " << net.input.channels << 'x' << net.input.height << 'x'
     << net.input.width << '\n';
  for (const auto& l : net.layers) {
    os << "layer " << to_string(l.kind) << " k=" << l.k << " d=" << l.dilation << " in=" << l.in_channels
       << " out=" << l.out_channels;
    if (l.post.bn) os << " bn";
    if (l.post.relu) os << " relu";
    if (is_cassod(l.kind)) os << " post=" << to_string(l.placement);
    os << " weights=" << format_weights(l.weights) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Lowering

inline std::size_t layer_weight_elements(const LayerDescriptor& l) {
  if (is_cassod(l.kind)) return static_cast<std::size_t>(weight_count(CountDescriptor{l.kind, 2, l.in_channels, l.out_channels}));
  return KernelSet::expected_size(l.k, l.in_channels, l.out_channels, l.depthwise());
}

inline std::array<LayerDescriptor, 2> lower_cassod(const LayerDescriptor& l) {
  const auto shapes = cassod_layer_shapes(variant_of(l.kind), l.in_channels, l.out_channels);
  std::array<LayerDescriptor, 2> parts;
  std::size_t file_offset = l.weights.offset;
  const std::uint32_t streams[2] = {kLayer1Stream, kLayer2Stream};
  for (std::size_t n = 0; n < 2; ++n) {
    LayerDescriptor& p = parts[n];
    p.kind = shapes[n].depthwise ? LayerKind::DepthwiseConv : LayerKind::DilatedConv;
    p.k = 2;
    p.dilation = l.dilation;
    p.in_channels = shapes[n].in_channels;
    p.out_channels = shapes[n].out_channels;
    p.line = l.line;
    p.weights = l.weights;
    if (l.weights.kind == LayerWeights::Kind::Seeded) p.weights.stream = l.weights.stream + streams[n];
    if (l.weights.kind == LayerWeights::Kind::File) {
      p.weights.offset = file_offset;
      file_offset += KernelSet::expected_size(2, p.in_channels, p.out_channels, shapes[n].depthwise);
    }
    const bool gets_post = n == 0 ? l.placement != PostPlacement::Outer : l.placement != PostPlacement::Inner;
    if (gets_post) p.post = l.post;
  }
  return parts;
}

/// Replaces every cassod-* layer by its two 2x2 dilated layers. Idempotent.
inline NetworkDescriptor lower(const NetworkDescriptor& net) {
  NetworkDescriptor out;
  out.name = net.name;
  out.input = net.input;
  for (const auto& l : net.layers) {
    if (is_cassod(l.kind)) {
      for (auto& p : lower_cassod(l)) out.layers.push_back(std::move(p));
    } else {
      out.layers.push_back(l);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Costing

inline std::vector<hw::ConvLayerSpec> layer_specs(const NetworkDescriptor& net) {
  const NetworkDescriptor lowered = lower(net);
  std::vector<hw::ConvLayerSpec> specs;
  for (const auto& l : lowered.layers) {
    specs.push_back({std::string(to_string(l.kind)), l.k, l.dilation, l.in_channels, l.out_channels,
                     net.input.height, net.input.width, l.depthwise()});
  }
  return specs;
}

inline hw::CycleReport network_cycles(const NetworkDescriptor& net, const hw::HwConfig& hw, hw::Mode mode) {
  const auto specs = layer_specs(net);
  return hw::network_cycles(specs, hw, mode);
}

struct AnalysisRow {
  int index = 0;
  LayerKind kind = LayerKind::DilatedConv;
  int k = 0;
  int dilation = 0;
  int in_channels = 0;
  int out_channels = 0;
  std::int64_t weights = 0;
  std::int64_t macs = 0;
  int rf = 1;  // cumulative receptive field after this layer
  std::int64_t cycles_baseline = 0;
  std::int64_t cycles_pixel_array = 0;
};

struct Analysis {
  std::vector<AnalysisRow> rows;
  std::int64_t total_weights = 0;
  std::int64_t total_macs = 0;
  int total_rf = 1;
  std::int64_t total_cycles_baseline = 0;
  std::int64_t total_cycles_pixel_array = 0;
  double fps_baseline = 0.0;
  double fps_pixel_array = 0.0;
};

/// Per-layer weights, MACs, cumulative receptive field and cycles in both modes.
/// CASSOD layers are costed as their lowered pair.
inline Analysis analyze(const NetworkDescriptor& net, const hw::HwConfig& hw) {
  validate_network(net);
  Analysis a;
  const std::int64_t pixels = static_cast<std::int64_t>(net.input.height) * net.input.width;
  int rf = 1;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    AnalysisRow row;
    row.index = static_cast<int>(i);
    row.kind = l.kind;
    row.k = l.k;
    row.dilation = l.dilation;
    row.in_channels = l.in_channels;
    row.out_channels = l.out_channels;
    row.weights = weight_count(CountDescriptor{l.kind, l.k, l.in_channels, l.out_channels});
    row.macs = row.weights * pixels;

    std::vector<LayerDescriptor> parts;
    if (is_cassod(l.kind)) {
      const auto lowered = lower_cassod(l);
      parts.assign(lowered.begin(), lowered.end());
    } else {
      parts.push_back(l);
    }
    for (const auto& p : parts) {
      rf += (p.k - 1) * p.dilation;
      const hw::ConvLayerSpec spec{std::string(to_string(p.kind)), p.k, p.dilation, p.in_channels,
                                   p.out_channels, net.input.height, net.input.width, p.depthwise()};
      try {
        row.cycles_baseline += hw::layer_cycles(spec, hw, hw::Mode::Baseline).cycles;
        row.cycles_pixel_array += hw::layer_cycles(spec, hw, hw::Mode::PixelArray).cycles;
      } catch (const NetError&) {
        throw;
      } catch (const Error& e) {
        throw NetError(e.kind(), e.what(), l.line, 0, static_cast<int>(i));
      }
    }
    row.rf = rf;
    a.total_weights += row.weights;
    a.total_macs += row.macs;
    a.total_cycles_baseline += row.cycles_baseline;
    a.total_cycles_pixel_array += row.cycles_pixel_array;
    a.rows.push_back(row);
  }
  a.total_rf = rf;
  a.fps_baseline = hw.clock_hz / static_cast<double>(a.total_cycles_baseline);
  a.fps_pixel_array = hw.clock_hz / static_cast<double>(a.total_cycles_pixel_array);
  return a;
}

inline void print_analysis(std::ostream& os, const NetworkDescriptor& net, const Analysis& a) {
  auto pad = [](const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; };
  os << "network " << net.name << " input " << net.input.channels << 'x' << net.input.height << 'x'
     << net.input.width << '\n';
  os << pad("layer", 6) << pad("kind", 17) << pad("k", 3) << pad("D", 4) << pad("in", 6) << pad("out", 6)
     << pad("weights", 12) << pad("macs", 14) << pad("rf", 5) << pad("cyc_base", 12) << pad("cyc_pa", 12) << '\n';
  for (const auto& r : a.rows) {
    os << pad(std::to_string(r.index), 6) << pad(std::string(to_string(r.kind)), 17) << pad(std::to_string(r.k), 3)
       << pad(std::to_string(r.dilation), 4) << pad(std::to_string(r.in_channels), 6)
       << pad(std::to_string(r.out_channels), 6) << pad(std::to_string(r.weights), 12)
       << pad(std::to_string(r.macs), 14) << pad(std::to_string(r.rf), 5)
       << pad(std::to_string(r.cycles_baseline), 12) << pad(std::to_string(r.cycles_pixel_array), 12) << '\n';
  }
  os << pad("total", 6) << pad("", 17 + 3 + 4 + 6 + 6) << pad(std::to_string(a.total_weights), 12)
     << pad(std::to_string(a.total_macs), 14) << pad(std::to_string(a.total_rf), 5)
     << pad(std::to_string(a.total_cycles_baseline), 12) << pad(std::to_string(a.total_cycles_pixel_array), 12)
     << '\n';
  os << "fps baseline " << format_real(a.fps_baseline) << " pixel-array " << format_real(a.fps_pixel_array)
     << '\n';
}

// ---------------------------------------------------------------------------
// Execution

struct ConvStep {
  KernelSet kernels;
  PostOp post;
};

using ExecStep = std::variant<ConvStep, CassodModule>;

namespace detail {

inline std::vector<double> file_values(const LayerWeights& w, std::size_t count,
                                       const std::filesystem::path& base_dir) {
  std::filesystem::path p(w.path);
  if (p.is_relative()) p = base_dir / p;
  const Tensor t = load_tensor(p.string());
  if (t.size() < w.offset + count) {
    throw Error(ErrorKind::Shape, "weight file '" + p.string() + "' has " + std::to_string(t.size()) +
                                      " values, need " + std::to_string(w.offset + count));
  }
  const auto values = t.data().subspan(w.offset, count);
  return {values.begin(), values.end()};
}

inline WeightSource generated_source(const LayerWeights& w) {
  switch (w.kind) {
    case LayerWeights::Kind::Unit: return WeightSource::unit();
    case LayerWeights::Kind::Seeded: return WeightSource::seeded(w.seed, w.stream);
    default: return WeightSource::zeros();
  }
}

inline KernelSet layer_kernels(const LayerDescriptor& l, const std::filesystem::path& base_dir) {
  if (l.weights.kind == LayerWeights::Kind::File) {
    const auto n = KernelSet::expected_size(l.k, l.in_channels, l.out_channels, l.depthwise());
    return KernelSet(l.k, l.dilation, l.in_channels, l.out_channels, l.depthwise(),
                     file_values(l.weights, n, base_dir));
  }
  return make_kernels(l.k, l.dilation, l.in_channels, l.out_channels, l.depthwise(), generated_source(l.weights));
}

// BN of a plain layer uses the stream right after its weights.
inline PostOp layer_post(const LayerDescriptor& l) {
  PostOp p;
  if (l.post.bn) p.affine = make_affine(l.out_channels, generated_source(l.weights), 1);
  p.relu = l.post.relu;
  return p;
}

inline CassodModule cassod_step(const LayerDescriptor& l, const std::filesystem::path& base_dir) {
  const auto parts = lower_cassod(l);
  return make_cassod(variant_of(l.kind), l.in_channels, l.out_channels, l.dilation,
                     layer_kernels(parts[0], base_dir), layer_kernels(parts[1], base_dir),
                     layer_post(parts[0]), layer_post(parts[1]));
}

}  // namespace detail

/// Builds executable steps; CASSOD layers become CassodModule steps.
inline std::vector<ExecStep> materialize(const NetworkDescriptor& net, const std::filesystem::path& base_dir = {}) {
  validate_network(net);
  std::vector<ExecStep> steps;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    try {
      if (is_cassod(l.kind)) {
        steps.emplace_back(detail::cassod_step(l, base_dir));
      } else {
        steps.emplace_back(ConvStep{detail::layer_kernels(l, base_dir), detail::layer_post(l)});
      }
    } catch (const NetError&) {
      throw;
    } catch (const Error& e) {
      throw NetError(e.kind(), e.what(), l.line, 0, static_cast<int>(i));
    }
  }
  return steps;
}

inline Tensor run_step(const ExecStep& step, const Tensor& input, const ExecOptions& options) {
  if (const auto* module = std::get_if<CassodModule>(&step)) return forward(*module, input, options);
  const auto& conv = std::get<ConvStep>(step);
  Tensor out = conv.kernels.base_size() == 2
                   ? dilated_conv_2x2(input, conv.kernels, PaddingSpec::same_zero(), options)
                   : conv2d(input, conv.kernels, PaddingSpec::same_zero(), options);
  apply_post_op(out, conv.post);
  return out;
}

inline Tensor execute(const NetworkDescriptor& net, const Tensor& input, const ExecOptions& options = {},
                      const std::filesystem::path& base_dir = {}) {
  if (input.channels() != net.input.channels || input.height() != net.input.height ||
      input.width() != net.input.width) {
    throw Error(ErrorKind::Shape, "input tensor is " + std::to_string(input.channels()) + "x" +
                                      std::to_string(input.height()) + "x" + std::to_string(input.width()) +
                                      ", network expects " + std::to_string(net.input.channels) + "x" +
                                      std::to_string(net.input.height) + "x" + std::to_string(net.input.width));
  }
  Tensor x = input;
  for (const auto& step : materialize(net, base_dir)) x = run_step(step, x, options);
  return x;
}

}  // namespace cassod::net
