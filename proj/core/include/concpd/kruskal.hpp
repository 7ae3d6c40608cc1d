#pragma once

// Kruskal (CP) models: factor matrices plus the super-diagonal core weights,
// and coupled sets of such models that share a leading block of columns.

#include "concpd/tensor.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace concpd {

struct KruskalTensor {
  std::vector<Matrix> factors;  // mode n is I_n x R
  Vector weights;               // lambda, length R

  KruskalTensor() = default;
  KruskalTensor(std::vector<Matrix> f, Vector w)
      : factors(std::move(f)), weights(std::move(w)) {}

  /// Unit weights.
  explicit KruskalTensor(std::vector<Matrix> f);

  [[nodiscard]] std::size_t order() const { return factors.size(); }
  [[nodiscard]] Index rank() const { return weights.size(); }
  [[nodiscard]] std::vector<std::size_t> dims() const;

  /// Throws std::invalid_argument when factor column counts disagree with
  /// the weight vector.
  void validate() const;
  [[nodiscard]] bool is_nonnegative() const;
};

/// Sum_r lambda_r u_r^(1) o ... o u_r^(N), formed as
/// U^(1) diag(lambda) (U^(N) (.) ... (.) U^(2))^T folded back into a tensor.
[[nodiscard]] DenseTensor reconstruct(const KruskalTensor& k);

/// R x ... x R (order times) tensor with `v` on its super-diagonal.
[[nodiscard]] DenseTensor ddiag_to_tensor(const Vector& v, std::size_t order);

/// Super-diagonal of a cubical tensor.
[[nodiscard]] Vector tensor_to_ddiag(const DenseTensor& t);

class ZeroColumnError : public std::invalid_argument {
 public:
  ZeroColumnError(std::size_t mode, Index column)
      : std::invalid_argument("zero column " + std::to_string(column + 1) +
                              " in mode " + std::to_string(mode + 1)),
        mode_(mode),
        column_(column) {}

  [[nodiscard]] std::size_t mode() const { return mode_; }
  [[nodiscard]] Index column() const { return column_; }

 private:
  std::size_t mode_;
  Index column_;
};

/// Scales every factor column to unit Euclidean norm, moving the norms into
/// the weights.  Throws ZeroColumnError naming the offending mode/column.
[[nodiscard]] KruskalTensor normalize_columns(const KruskalTensor& k);

/// S Kruskal models coupled per mode: the first L_n columns of every block's
/// mode-n factor are one shared matrix.  The common part is stored once, so
/// blocks cannot drift apart.
class CoupledFactorSet {
 public:
  CoupledFactorSet() = default;

  /// `common[n]` is I_n x L_n, `individual[s][n]` is I_n x (R_s - L_n).
  CoupledFactorSet(std::vector<Matrix> common,
                   std::vector<std::vector<Matrix>> individual,
                   std::vector<Vector> weights);

  /// Builds a set from full per-block models, verifying that the leading
  /// `coupled[n]` columns agree across blocks (bit-exact).  Violations throw
  /// std::invalid_argument naming the mode and block.
  static CoupledFactorSet from_blocks(const std::vector<KruskalTensor>& blocks,
                                      const std::vector<std::size_t>& coupled);

  [[nodiscard]] std::size_t num_blocks() const { return weights_.size(); }
  [[nodiscard]] std::size_t order() const { return common_.size(); }
  [[nodiscard]] Index rank(std::size_t s) const { return weights_.at(s).size(); }
  [[nodiscard]] std::size_t coupled_count(std::size_t n) const {
    return static_cast<std::size_t>(common_.at(n).cols());
  }
  [[nodiscard]] std::vector<std::size_t> coupled_counts() const;

  [[nodiscard]] const Matrix& common(std::size_t n) const { return common_.at(n); }
  Matrix& common(std::size_t n) { return common_.at(n); }
  [[nodiscard]] const Matrix& individual(std::size_t s, std::size_t n) const {
    return individual_.at(s).at(n);
  }
  Matrix& individual(std::size_t s, std::size_t n) {
    return individual_.at(s).at(n);
  }
  [[nodiscard]] const Vector& weights(std::size_t s) const { return weights_.at(s); }
  Vector& weights(std::size_t s) { return weights_.at(s); }

  /// Assembled I_n x R_s factor [common | individual].
  [[nodiscard]] Matrix factor(std::size_t s, std::size_t n) const;
  /// Writes a full I_n x R_s factor back, splitting it into its parts.  The
  /// leading columns overwrite the shared block for every model.
  void set_factor(std::size_t s, std::size_t n, const Matrix& full);

  [[nodiscard]] std::vector<Matrix> factors(std::size_t s) const;
  [[nodiscard]] KruskalTensor block(std::size_t s) const;
  [[nodiscard]] std::vector<KruskalTensor> blocks() const;

  [[nodiscard]] bool is_nonnegative() const;
  [[nodiscard]] bool all_finite() const;

 private:
  std::vector<Matrix> common_;
  std::vector<std::vector<Matrix>> individual_;
  std::vector<Vector> weights_;
};

}  // namespace concpd
