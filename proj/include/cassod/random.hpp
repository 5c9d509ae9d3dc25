#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cassod {

// Deterministic uniform values in [-1, 1) for a (seed, stream) pair.
//
// std::mt19937_64 and std::seed_seq are fully specified by the standard, and the
// mapping to doubles is done here rather than through a distribution object, so
// the sequence is identical across standard library implementations.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed, std::uint32_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream};
    engine_.seed(seq);
  }

  double next() {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
    return 2.0 * unit - 1.0;
  }

  std::vector<double> take(std::size_t n) {
    std::vector<double> values(n);
    for (auto& v : values) v = next();
    return values;
  }

 private:
  std::mt19937_64 engine_;
};

inline std::vector<double> seeded_uniform(std::size_t n, std::uint64_t seed, std::uint32_t stream = 0) {
  return SeededUniform(seed, stream).take(n);
}

}  // namespace cassod
