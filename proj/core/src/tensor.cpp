#include "concpd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace concpd {
namespace {

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw std::invalid_argument("tensor order must be >= 1");
  if (dims.size() > kMaxOrder) {
    throw std::invalid_argument("tensor order " + std::to_string(dims.size()) +
                                " exceeds the supported maximum of " +
                                std::to_string(kMaxOrder));
  }
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (dims[n] == 0) {
      throw std::invalid_argument("tensor dimension " + std::to_string(n + 1) +
                                  " is zero");
    }
  }
}

Index check_common_cols(std::span<const Matrix* const> ms) {
  if (ms.empty()) throw std::invalid_argument("empty matrix list");
  const Index r = ms.front()->cols();
  for (const Matrix* m : ms) {
    if (m->cols() != r) {
      throw std::invalid_argument("column count mismatch: " +
                                  std::to_string(m->cols()) + " vs " +
                                  std::to_string(r));
    }
  }
  return r;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)) {
  check_dims(dims_);
  values_.assign(product(dims_), 0.0);
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims,
                         std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  check_dims(dims_);
  if (values_.size() != product(dims_)) {
    throw std::invalid_argument("tensor holds " +
                                std::to_string(values_.size()) +
                                " values but its dimensions require " +
                                std::to_string(product(dims_)));
  }
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) {
    throw std::invalid_argument("index arity does not match tensor order");
  }
  std::size_t off = 0;
  std::size_t stride = 1;
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    if (index[n] >= dims_[n]) throw std::out_of_range("tensor index");
    off += index[n] * stride;
    stride *= dims_[n];
  }
  return off;
}

double DenseTensor::frobenius_norm() const { return as_vector().norm(); }

bool DenseTensor::is_nonnegative() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return v >= 0.0; });
}

bool DenseTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Vector vectorize(const DenseTensor& t) { return t.as_vector(); }

Matrix matricize(const DenseTensor& t, std::size_t mode) {
  const auto& dims = t.dims();
  if (mode >= dims.size()) {
    throw std::out_of_range("mode " + std::to_string(mode + 1) +
                            " out of range for order " +
                            std::to_string(dims.size()));
  }
  // View the tensor as [inner, I_n, outer] with inner fastest.
  const std::size_t inner = product(std::span(dims).first(mode));
  const std::size_t rows = dims[mode];
  const std::size_t outer = product(std::span(dims).subspan(mode + 1));

  Matrix out(static_cast<Index>(rows), static_cast<Index>(inner * outer));
  const double* src = t.values().data();
  for (std::size_t b = 0; b < outer; ++b) {
    for (std::size_t i = 0; i < rows; ++i) {
      const double* slab = src + inner * (i + rows * b);
      for (std::size_t a = 0; a < inner; ++a) {
        out(static_cast<Index>(i), static_cast<Index>(a + inner * b)) = slab[a];
      }
    }
  }
  return out;
}

DenseTensor fold(const Matrix& unfolding, std::size_t mode,
                 std::vector<std::size_t> dims) {
  DenseTensor t(std::move(dims));
  const auto& d = t.dims();
  if (mode >= d.size()) throw std::out_of_range("fold: mode out of range");
  const std::size_t inner = product(std::span(d).first(mode));
  const std::size_t rows = d[mode];
  const std::size_t outer = product(std::span(d).subspan(mode + 1));
  if (static_cast<std::size_t>(unfolding.rows()) != rows ||
      static_cast<std::size_t>(unfolding.cols()) != inner * outer) {
    throw std::invalid_argument("fold: unfolding shape does not match dims");
  }
  double* dst = t.values().data();
  for (std::size_t b = 0; b < outer; ++b) {
    for (std::size_t i = 0; i < rows; ++i) {
      double* slab = dst + inner * (i + rows * b);
      for (std::size_t a = 0; a < inner; ++a) {
        slab[a] =
            unfolding(static_cast<Index>(i), static_cast<Index>(a + inner * b));
      }
    }
  }
  return t;
}

Matrix khatri_rao(std::span<const Matrix* const> ms) {
  const Index r = check_common_cols(ms);
  Index rows = 1;
  for (const Matrix* m : ms) rows *= m->rows();

  Matrix out(rows, r);
  Vector acc;
  Vector next;
  for (Index c = 0; c < r; ++c) {
    acc = ms.front()->col(c);
    for (std::size_t k = 1; k < ms.size(); ++k) {
      const auto& b = *ms[k];
      next.resize(acc.size() * b.rows());
      for (Index i = 0; i < acc.size(); ++i) {
        next.segment(i * b.rows(), b.rows()) = acc(i) * b.col(c);
      }
      acc.swap(next);
    }
    out.col(c) = acc;
  }
  return out;
}

Matrix khatri_rao(std::span<const Matrix> ms) {
  std::vector<const Matrix*> ptrs;
  ptrs.reserve(ms.size());
  for (const auto& m : ms) ptrs.push_back(&m);
  return khatri_rao(std::span<const Matrix* const>(ptrs));
}

Matrix khatri_rao_descending(std::span<const Matrix> factors,
                             std::optional<std::size_t> skip) {
  std::vector<const Matrix*> ptrs;
  for (std::size_t n = factors.size(); n-- > 0;) {
    if (skip && *skip == n) continue;
    ptrs.push_back(&factors[n]);
  }
  if (ptrs.empty()) {
    // Order-1 model with its only mode skipped: the empty product.
    const Index r = factors.empty() ? 0 : factors.front().cols();
    return Matrix::Ones(1, r);
  }
  return khatri_rao(std::span<const Matrix* const>(ptrs));
}

Matrix hadamard_product(std::span<const Matrix> grams,
                        std::optional<std::size_t> skip) {
  if (grams.empty()) throw std::invalid_argument("empty gram list");
  Matrix out = Matrix::Ones(grams.front().rows(), grams.front().cols());
  for (std::size_t n = 0; n < grams.size(); ++n) {
    if (skip && *skip == n) continue;
    if (grams[n].rows() != out.rows() || grams[n].cols() != out.cols()) {
      throw std::invalid_argument("gram shape mismatch");
    }
    out.array() *= grams[n].array();
  }
  return out;
}

Matrix hadamard_gram(std::span<const Matrix> ms,
                     std::optional<std::size_t> skip) {
  std::vector<const Matrix*> ptrs;
  for (const auto& m : ms) ptrs.push_back(&m);
  const Index r = check_common_cols(ptrs);
  Matrix out = Matrix::Ones(r, r);
  for (std::size_t n = 0; n < ms.size(); ++n) {
    if (skip && *skip == n) continue;
    out.array() *= (ms[n].transpose() * ms[n]).array();
  }
  return out;
}

Matrix hadamard_cross_gram(std::span<const Matrix> lhs,
                           std::span<const Matrix> rhs,
                           std::optional<std::size_t> skip) {
  if (lhs.size() != rhs.size() || lhs.empty()) {
    throw std::invalid_argument("cross gram: list length mismatch");
  }
  Matrix out = Matrix::Ones(lhs.front().cols(), rhs.front().cols());
  for (std::size_t n = 0; n < lhs.size(); ++n) {
    if (lhs[n].rows() != rhs[n].rows() ||
        lhs[n].cols() != out.rows() || rhs[n].cols() != out.cols()) {
      throw std::invalid_argument("cross gram: shape mismatch in mode " +
                                  std::to_string(n + 1));
    }
    if (skip && *skip == n) continue;
    out.array() *= (lhs[n].transpose() * rhs[n]).array();
  }
  return out;
}

namespace {

double power_iteration(const Matrix& m, Vector x, double tol) {
  x.normalize();
  Vector y = m * x;
  double rayleigh = x.dot(y);
  for (int sweep = 0; sweep < kSpectralMaxSweeps; ++sweep) {
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    y.noalias() = m * x;
    const double next = x.dot(y);
    const bool converged = std::abs(next - rayleigh) <= tol * std::abs(next);
    rayleigh = next;
    if (converged) break;
  }
  return rayleigh;
}

}  // namespace

double spectral_norm(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("spectral_norm: matrix is " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", not square");
  }
  if (m.size() == 0 || m.isZero(0.0)) return 0.0;

  if ((m.array() < 0.0).any()) {
    // The all-ones start can be an eigenvector of a smaller eigenvalue here.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  // Entrywise nonnegative: the dominant eigenvector is nonnegative, so the
  // all-ones start is never orthogonal to it.
  return power_iteration(m, Vector::Ones(m.rows()), tol);
}

}  // namespace concpd
