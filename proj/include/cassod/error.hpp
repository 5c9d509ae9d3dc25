#pragma once

#include <stdexcept>
#include <string>

namespace cassod {

enum class ErrorKind {
  InvalidDilation,      // odd D where an even D is required
  UnsupportedFilter,    // k outside [1, 7]
  UnsupportedDilation,  // D outside what the Pixel Array can route
  Shape,                // channel / spatial mismatch
  Syntax,               // .cassod-net grammar error
  Semantic,             // .cassod-net validation error
  Io,
  NonFinite,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDilation: return "invalid-dilation";
    case ErrorKind::UnsupportedFilter: return "unsupported-filter";
    case ErrorKind::UnsupportedDilation: return "unsupported-dilation";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::Semantic: return "semantic";
    case ErrorKind::Io: return "io";
    case ErrorKind::NonFinite: return "non-finite";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cassod
