#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cassod/error.hpp"
#include "cassod/tensor.hpp"

namespace cassod {

// Text format:
//   tensor v1 <C> <H> <W>
//   <C*H*W whitespace-separated decimals in (c, i, j) order>

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_tensor(std::ostream& os, const Tensor& t) {
  os << "tensor v1 " << t.channels() << ' ' << t.height() << ' ' << t.width() << '\n';
  for (int c = 0; c < t.channels(); ++c) {
    for (int i = 0; i < t.height(); ++i) {
      for (int j = 0; j < t.width(); ++j) {
        if (j) os << ' ';
        os << format_real(t(c, i, j));
      }
      os << '\n';
    }
  }
}

inline Tensor read_tensor(std::istream& is) {
  std::string magic, version;
  long long c = 0, h = 0, w = 0;
  if (!(is >> magic >> version) || magic != "tensor" || version != "v1") {
    throw Error(ErrorKind::Syntax, "tensor file must start with 'tensor v1'");
  }
  if (!(is >> c >> h >> w) || c <= 0 || h <= 0 || w <= 0) {
    throw Error(ErrorKind::Syntax, "tensor header needs three positive dimensions");
  }
  const auto n = static_cast<std::size_t>(c * h * w);
  std::vector<double> data;
  data.reserve(n);
  std::string token;
  while (data.size() < n && is >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw Error(ErrorKind::Syntax, "bad tensor value '" + token + "' at element " +
                                         std::to_string(data.size()));
    }
    data.push_back(v);
  }
  if (data.size() != n) {
    throw Error(ErrorKind::Syntax, "tensor file has " + std::to_string(data.size()) +
                                       " values, header declares " + std::to_string(n));
  }
  if (is >> token) throw Error(ErrorKind::Syntax, "trailing data after tensor values");
  return Tensor(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w), std::move(data));
}

inline Tensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open tensor file '" + path + "'");
  return read_tensor(in);
}

inline void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write tensor file '" + path + "'");
  write_tensor(out, t);
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace cassod
