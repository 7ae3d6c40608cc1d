#include "concpd/kruskal.hpp"

#include <algorithm>
#include <cmath>

namespace concpd {

KruskalTensor::KruskalTensor(std::vector<Matrix> f) : factors(std::move(f)) {
  weights = Vector::Ones(factors.empty() ? 0 : factors.front().cols());
}

std::vector<std::size_t> KruskalTensor::dims() const {
  std::vector<std::size_t> d;
  d.reserve(factors.size());
  for (const auto& u : factors) d.push_back(static_cast<std::size_t>(u.rows()));
  return d;
}

void KruskalTensor::validate() const {
  if (factors.empty()) throw std::invalid_argument("Kruskal model has no factors");
  for (std::size_t n = 0; n < factors.size(); ++n) {
    if (factors[n].cols() != weights.size()) {
      throw std::invalid_argument(
          "factor " + std::to_string(n + 1) + " has " +
          std::to_string(factors[n].cols()) + " columns but the model rank is " +
          std::to_string(weights.size()));
    }
    if (factors[n].rows() == 0) {
      throw std::invalid_argument("factor " + std::to_string(n + 1) +
                                  " has no rows");
    }
  }
}

bool KruskalTensor::is_nonnegative() const {
  if ((weights.array() < 0.0).any()) return false;
  return std::all_of(factors.begin(), factors.end(), [](const Matrix& u) {
    return (u.array() >= 0.0).all();
  });
}

DenseTensor reconstruct(const KruskalTensor& k) {
  k.validate();
  const Matrix lead = k.factors.front() * k.weights.asDiagonal();
  const Matrix rest = khatri_rao_descending(k.factors, 0);
  const Matrix unfolding = lead * rest.transpose();
  return fold(unfolding, 0, k.dims());
}

DenseTensor ddiag_to_tensor(const Vector& v, std::size_t order) {
  if (order == 0) throw std::invalid_argument("ddiag_to_tensor: order must be >= 1");
  const auto r = static_cast<std::size_t>(v.size());
  DenseTensor t(std::vector<std::size_t>(order, r));
  std::vector<std::size_t> idx(order);
  for (std::size_t i = 0; i < r; ++i) {
    std::fill(idx.begin(), idx.end(), i);
    t(idx) = v(static_cast<Index>(i));
  }
  return t;
}

Vector tensor_to_ddiag(const DenseTensor& t) {
  const std::size_t r = t.dim(0);
  for (std::size_t d : t.dims()) {
    if (d != r) throw std::invalid_argument("tensor_to_ddiag: tensor is not cubical");
  }
  Vector v(static_cast<Index>(r));
  std::vector<std::size_t> idx(t.order());
  for (std::size_t i = 0; i < r; ++i) {
    std::fill(idx.begin(), idx.end(), i);
    v(static_cast<Index>(i)) = t(idx);
  }
  return v;
}

KruskalTensor normalize_columns(const KruskalTensor& k) {
  k.validate();
  KruskalTensor out = k;
  for (std::size_t n = 0; n < out.factors.size(); ++n) {
    for (Index r = 0; r < out.rank(); ++r) {
      const double norm = out.factors[n].col(r).norm();
      if (norm == 0.0) throw ZeroColumnError(n, r);
      out.factors[n].col(r) /= norm;
      out.weights(r) *= norm;
    }
  }
  return out;
}

CoupledFactorSet::CoupledFactorSet(std::vector<Matrix> common,
                                   std::vector<std::vector<Matrix>> individual,
                                   std::vector<Vector> weights)
    : common_(std::move(common)),
      individual_(std::move(individual)),
      weights_(std::move(weights)) {
  if (common_.empty()) throw std::invalid_argument("coupled set has no modes");
  if (individual_.size() != weights_.size() || weights_.empty()) {
    throw std::invalid_argument("coupled set: block count mismatch");
  }
  for (std::size_t s = 0; s < weights_.size(); ++s) {
    if (individual_[s].size() != common_.size()) {
      throw std::invalid_argument("coupled set: block " + std::to_string(s + 1) +
                                  " has the wrong number of modes");
    }
    for (std::size_t n = 0; n < common_.size(); ++n) {
      const Matrix& c = common_[n];
      const Matrix& u = individual_[s][n];
      if (c.cols() > 0 && c.rows() != u.rows()) {
        throw std::invalid_argument(
            "coupled set: mode " + std::to_string(n + 1) + " of block " +
            std::to_string(s + 1) + " has " + std::to_string(u.rows()) +
            " rows but the common part has " + std::to_string(c.rows()));
      }
      if (c.cols() + u.cols() != weights_[s].size()) {
        throw std::invalid_argument(
            "coupled set: mode " + std::to_string(n + 1) + " of block " +
            std::to_string(s + 1) + " has " + std::to_string(c.cols() + u.cols()) +
            " columns but the block rank is " + std::to_string(weights_[s].size()));
      }
    }
  }
}

CoupledFactorSet CoupledFactorSet::from_blocks(
    const std::vector<KruskalTensor>& blocks,
    const std::vector<std::size_t>& coupled) {
  if (blocks.empty()) throw std::invalid_argument("coupled set: no blocks");
  const std::size_t order = blocks.front().order();
  if (coupled.size() != order) {
    throw std::invalid_argument("coupled set: " + std::to_string(coupled.size()) +
                                " coupled counts for order " +
                                std::to_string(order));
  }
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    blocks[s].validate();
    if (blocks[s].order() != order) {
      throw std::invalid_argument("coupled set: block " + std::to_string(s + 1) +
                                  " has a different order");
    }
  }

  std::vector<Matrix> common(order);
  std::vector<std::vector<Matrix>> individual(blocks.size(),
                                              std::vector<Matrix>(order));
  std::vector<Vector> weights;
  for (std::size_t n = 0; n < order; ++n) {
    const auto l = static_cast<Index>(coupled[n]);
    for (std::size_t s = 0; s < blocks.size(); ++s) {
      if (l > blocks[s].rank()) {
        throw std::invalid_argument(
            "coupled set: mode " + std::to_string(n + 1) + " couples " +
            std::to_string(l) + " columns but block " + std::to_string(s + 1) +
            " has rank " + std::to_string(blocks[s].rank()));
      }
    }
    const Matrix& ref = blocks.front().factors[n];
    common[n] = ref.leftCols(l);
    for (std::size_t s = 0; s < blocks.size(); ++s) {
      const Matrix& u = blocks[s].factors[n];
      if (l > 0 && (u.rows() != ref.rows() || u.leftCols(l) != common[n])) {
        throw std::invalid_argument(
            "coupled set: the leading " + std::to_string(l) +
            " columns of mode " + std::to_string(n + 1) + " in block " +
            std::to_string(s + 1) + " differ from block 1");
      }
      individual[s][n] = u.rightCols(u.cols() - l);
    }
  }
  for (const auto& b : blocks) weights.push_back(b.weights);
  return {std::move(common), std::move(individual), std::move(weights)};
}

std::vector<std::size_t> CoupledFactorSet::coupled_counts() const {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < order(); ++n) out.push_back(coupled_count(n));
  return out;
}

Matrix CoupledFactorSet::factor(std::size_t s, std::size_t n) const {
  const Matrix& c = common_.at(n);
  const Matrix& u = individual_.at(s).at(n);
  Matrix out(u.rows(), c.cols() + u.cols());
  out << c, u;
  return out;
}

void CoupledFactorSet::set_factor(std::size_t s, std::size_t n,
                                  const Matrix& full) {
  Matrix& c = common_.at(n);
  Matrix& u = individual_.at(s).at(n);
  if (full.cols() != c.cols() + u.cols() || full.rows() != u.rows()) {
    throw std::invalid_argument("set_factor: shape mismatch");
  }
  c = full.leftCols(c.cols());
  u = full.rightCols(u.cols());
}

std::vector<Matrix> CoupledFactorSet::factors(std::size_t s) const {
  std::vector<Matrix> out;
  out.reserve(order());
  for (std::size_t n = 0; n < order(); ++n) out.push_back(factor(s, n));
  return out;
}

KruskalTensor CoupledFactorSet::block(std::size_t s) const {
  return {factors(s), weights_.at(s)};
}

std::vector<KruskalTensor> CoupledFactorSet::blocks() const {
  std::vector<KruskalTensor> out;
  for (std::size_t s = 0; s < num_blocks(); ++s) out.push_back(block(s));
  return out;
}

bool CoupledFactorSet::is_nonnegative() const {
  auto nonneg = [](const auto& m) { return (m.array() >= 0.0).all(); };
  return std::all_of(common_.begin(), common_.end(), nonneg) &&
         std::all_of(weights_.begin(), weights_.end(), nonneg) &&
         std::all_of(individual_.begin(), individual_.end(), [&](const auto& b) {
           return std::all_of(b.begin(), b.end(), nonneg);
         });
}

bool CoupledFactorSet::all_finite() const {
  auto finite = [](const auto& m) { return m.allFinite(); };
  return std::all_of(common_.begin(), common_.end(), finite) &&
         std::all_of(weights_.begin(), weights_.end(), finite) &&
         std::all_of(individual_.begin(), individual_.end(), [&](const auto& b) {
           return std::all_of(b.begin(), b.end(), finite);
         });
}

}  // namespace concpd
