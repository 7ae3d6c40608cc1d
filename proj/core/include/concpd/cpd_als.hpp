#pragma once

// Unconstrained CP decomposition by alternating least squares.  Used to build
// the low-rank compression consumed by the lra solver mode.

#include "concpd/kruskal.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace concpd {

struct AlsOptions {
  /// Target rank; 0 means "use the block's model rank" when driven by the
  /// coupled solver.
  Index rank = 0;
  double tol = 1e-4;
  int max_iter = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AlsResult {
  KruskalTensor model;  // unit weights, factors carry the scale
  double rel_err = 0.0;
  int iterations = 0;
  /// Relative error after every full sweep.
  std::vector<double> rel_err_history;
};

/// Raised when an iterate stops being finite; a caller may retry with another
/// seed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[nodiscard]] AlsResult cpd_als(const DenseTensor& t, const AlsOptions& opts);

}  // namespace concpd
