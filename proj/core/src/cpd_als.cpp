#include "concpd/cpd_als.hpp"

#include "concpd/random.hpp"

#include <cmath>
#include <string>

namespace concpd {

void AlsOptions::validate() const {
  if (rank < 1) throw std::invalid_argument("ALS rank must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("ALS tolerance must be > 0");
  if (max_iter < 0) throw std::invalid_argument("ALS max_iter must be >= 0");
}

AlsResult cpd_als(const DenseTensor& t, const AlsOptions& opts) {
  opts.validate();
  const std::size_t order = t.order();
  const auto& dims = t.dims();
  for (std::size_t n = 0; n < order; ++n) {
    const std::size_t others = t.size() / dims[n];
    if (order > 1 && static_cast<std::size_t>(opts.rank) > others) {
      throw std::invalid_argument(
          "ALS rank " + std::to_string(opts.rank) + " exceeds " +
          std::to_string(others) + ", the column count of the mode-" +
          std::to_string(n + 1) + " unfolding");
    }
  }

  AlsResult result;
  const double norm = t.frobenius_norm();
  if (norm == 0.0) {
    std::vector<Matrix> zeros;
    for (std::size_t d : dims) zeros.push_back(Matrix::Zero(static_cast<Index>(d), opts.rank));
    result.model = KruskalTensor(std::move(zeros));
    return result;
  }

  Rng rng(derive_seed(opts.seed, 0xA15));
  std::vector<Matrix> factors;
  for (std::size_t d : dims) {
    factors.push_back(rng.uniform_matrix(static_cast<Index>(d), opts.rank));
  }
  std::vector<Matrix> unfoldings;
  for (std::size_t n = 0; n < order; ++n) unfoldings.push_back(matricize(t, n));
  std::vector<Matrix> grams;
  for (const auto& u : factors) grams.push_back(u.transpose() * u);

  const double norm_sq = norm * norm;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    Matrix last_mttkrp;
    for (std::size_t n = 0; n < order; ++n) {
      Matrix mttkrp = unfoldings[n] * khatri_rao_descending(factors, n);
      Matrix gram = hadamard_product(grams, n);
      const double ridge = std::max(1e-12 * gram.trace() / static_cast<double>(opts.rank),
                                    std::numeric_limits<double>::min());
      gram.diagonal().array() += ridge;
      factors[n] = gram.ldlt().solve(mttkrp.transpose()).transpose();
      if (!factors[n].allFinite()) {
        throw NumericalError("ALS diverged in sweep " + std::to_string(it + 1) +
                             ", mode " + std::to_string(n + 1));
      }
      grams[n] = factors[n].transpose() * factors[n];
      if (n + 1 == order) last_mttkrp = std::move(mttkrp);
    }
    // ||M - X||^2 = ||M||^2 - 2<M, X> + 1^T (U^T U)^* 1
    const double inner = (factors.back().array() * last_mttkrp.array()).sum();
    const double model_sq = hadamard_product(grams).sum();
    const double residual_sq = std::max(norm_sq - 2.0 * inner + model_sq, 0.0);
    const double rel_err = std::sqrt(residual_sq) / norm;
    if (!std::isfinite(rel_err)) {
      throw NumericalError("ALS objective is not finite after sweep " +
                           std::to_string(it + 1));
    }
    result.rel_err_history.push_back(rel_err);
    result.rel_err = rel_err;
    result.iterations = it + 1;
    if (std::abs(previous - rel_err) < opts.tol) break;
    previous = rel_err;
  }
  if (result.iterations == 0) {
    result.rel_err = (t.as_vector() - vectorize(reconstruct(KruskalTensor(factors)))).norm() / norm;
  }
  result.model = KruskalTensor(std::move(factors));
  return result;
}

}  // namespace concpd
