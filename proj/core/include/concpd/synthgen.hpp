#pragma once

// Random ground-truth coupled problems: nonnegative factors with a shared
// leading block per mode, reconstructed and corrupted by gaussian noise.

#include "concpd/solver.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace concpd {

struct SynthSpec {
  std::size_t blocks = 10;
  /// n in I = (8n, 9n, 10n).
  std::size_t size_factor = 2;
  /// Overrides for the size, rank and coupling rules.
  std::optional<std::vector<std::size_t>> dims;
  std::optional<Index> rank;
  std::optional<std::vector<std::size_t>> coupled;
  /// +inf gives noiseless tensors.
  double snr_db = 20.0;
  std::uint64_t seed = 0;

  [[nodiscard]] std::vector<std::size_t> resolved_dims() const;
  /// round(I_2 / 2) unless overridden.
  [[nodiscard]] Index resolved_rank() const;
  /// round(I_2 / 4) in every mode unless overridden.
  [[nodiscard]] std::vector<std::size_t> resolved_coupled() const;

  void validate() const;
};

/// Rounds half away from zero.
[[nodiscard]] long round_half_away(double x);

struct SynthProblem {
  CoupledProblem problem;
  /// Clean, un-normalized truth.
  CoupledFactorSet truth;
};

/// Factors uniform [0, 1) with the common block drawn once, lambda uniform
/// [0.5, 1.5), each block's noise from its own derived seed.
[[nodiscard]] SynthProblem generate(const SynthSpec& spec);

}  // namespace concpd
