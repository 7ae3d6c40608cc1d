#pragma once

// Dense tensor storage and the multilinear kernels the solvers are built on.
//
// Linearization is first-index-fastest: element (i_1, ..., i_N) (0-based)
// lives at i_1 + I_1*i_2 + I_1*I_2*i_3 + ...  Matrices are Eigen column-major,
// so the mode-1 unfolding of a tensor shares its memory order, and the
// Khatri-Rao product of the factors listed in descending mode order
// (U^(N), ..., U^(1)) satisfies vec([[lambda; U]]) = KR * lambda exactly.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace concpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr std::size_t kMaxOrder = 8;

class DenseTensor {
 public:
  DenseTensor() = default;

  /// Zero tensor with the given dimensions.
  explicit DenseTensor(std::vector<std::size_t> dims);
  DenseTensor(std::vector<std::size_t> dims, std::vector<double> values);

  [[nodiscard]] std::size_t order() const { return dims_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& dims() const { return dims_; }
  [[nodiscard]] std::size_t dim(std::size_t n) const { return dims_.at(n); }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }

  /// Offset of a 0-based multi-index in the first-index-fastest layout.
  [[nodiscard]] std::size_t offset(std::span<const std::size_t> index) const;

  double& operator()(std::span<const std::size_t> index) {
    return values_[offset(index)];
  }
  double operator()(std::span<const std::size_t> index) const {
    return values_[offset(index)];
  }

  [[nodiscard]] Eigen::Map<const Vector> as_vector() const {
    return {values_.data(), static_cast<Index>(values_.size())};
  }
  [[nodiscard]] Eigen::Map<Vector> as_vector() {
    return {values_.data(), static_cast<Index>(values_.size())};
  }

  [[nodiscard]] double frobenius_norm() const;
  [[nodiscard]] bool is_nonnegative() const;
  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> values_;
};

/// Copy of the values in linearization order.
[[nodiscard]] Vector vectorize(const DenseTensor& t);

/// Mode-n unfolding (0-based mode): I_n x prod_{m != n} I_m, remaining
/// indices ordered first-fastest with mode n skipped.
[[nodiscard]] Matrix matricize(const DenseTensor& t, std::size_t mode);

/// Inverse of matricize.
[[nodiscard]] DenseTensor fold(const Matrix& unfolding, std::size_t mode,
                               std::vector<std::size_t> dims);

/// Column-wise Kronecker product of the matrices in their listed order; the
/// first matrix's row index varies slowest.
[[nodiscard]] Matrix khatri_rao(std::span<const Matrix> ms);
[[nodiscard]] Matrix khatri_rao(std::span<const Matrix* const> ms);

/// U^(N) (.) ... (.) U^(1), optionally skipping one mode.  `factors` is given
/// in ascending mode order.
[[nodiscard]] Matrix khatri_rao_descending(
    std::span<const Matrix> factors, std::optional<std::size_t> skip = {});

/// Hadamard product of the per-matrix grams U^T U, skipping `skip`.
[[nodiscard]] Matrix hadamard_gram(std::span<const Matrix> ms,
                                   std::optional<std::size_t> skip = {});

/// Hadamard product of the cross grams lhs_n^T rhs_n, skipping `skip`.
/// lhs and rhs must have equal length and matching row counts per entry.
[[nodiscard]] Matrix hadamard_cross_gram(std::span<const Matrix> lhs,
                                         std::span<const Matrix> rhs,
                                         std::optional<std::size_t> skip = {});

/// Hadamard product of precomputed grams, skipping `skip`.  Returns the
/// all-ones matrix of the given shape when nothing remains.
[[nodiscard]] Matrix hadamard_product(std::span<const Matrix> grams,
                                      std::optional<std::size_t> skip = {});

inline constexpr double kSpectralTolerance = 1e-9;
inline constexpr int kSpectralMaxSweeps = 1000;

/// Largest eigenvalue of a symmetric PSD matrix.  Entrywise nonnegative input
/// (every gram the solver forms) uses power iteration from the all-ones
/// vector; anything else goes to a dense eigensolver.  0 for the zero matrix.
[[nodiscard]] double spectral_norm(const Matrix& m,
                                   double tol = kSpectralTolerance);

}  // namespace concpd
