#pragma once

#include "concpd/tensor.hpp"

#include <cstdint>
#include <random>

namespace concpd {

/// Mixes a base seed with a stream tag (splitmix64 finalizer) so that related
/// random streams (factors, noise, per-block draws) never share state.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }

  Matrix uniform_matrix(Index rows, Index cols, double lo = 0.0, double hi = 1.0);
  Vector uniform_vector(Index size, double lo = 0.0, double hi = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace concpd
