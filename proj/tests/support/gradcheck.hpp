#pragma once

// Finite-difference check of the solver's block gradients on small random
// coupled instances.  The objective used for the differences is the loop
// oracle, never the library's own objective.

#include "concpd/solver.hpp"

#include "oracles.hpp"

#include <algorithm>

namespace concpd::gradcheck {

struct Instance {
  std::vector<DenseTensor> targets;  // what the data terms represent
  std::vector<BlockData> data;
  CoupledFactorSet point;
};

/// N = 3, dims <= 6, R <= 4, S <= 3, coupled counts covering 0, min R and a
/// value in between.  Lra instances use sign-indefinite compressions of rank
/// at most R.
inline Instance make_instance(std::uint64_t seed, SolverMode mode) {
  Rng rng(derive_seed(seed, 0x6AD));
  const std::size_t blocks = 1 + seed % 3;
  std::vector<Index> ranks;
  for (std::size_t s = 0; s < blocks; ++s) ranks.push_back(1 + static_cast<Index>(rng.uniform() * 4));
  const auto min_rank = static_cast<std::size_t>(*std::min_element(ranks.begin(), ranks.end()));
  std::vector<std::size_t> coupled(3);
  coupled[seed % 3] = 0;
  coupled[(seed + 1) % 3] = min_rank;
  coupled[(seed + 2) % 3] = static_cast<std::size_t>(rng.uniform() * static_cast<double>(min_rank + 1));

  std::vector<std::size_t> shared(3);
  for (auto& d : shared) d = 2 + static_cast<std::size_t>(rng.uniform() * 5);

  CoupledProblem problem;
  problem.ranks = ranks;
  problem.coupled = coupled;
  Instance inst;
  for (std::size_t s = 0; s < blocks; ++s) {
    std::vector<std::size_t> dims = shared;
    for (std::size_t n = 0; n < 3; ++n) {
      if (coupled[n] == 0) dims[n] = 2 + static_cast<std::size_t>(rng.uniform() * 5);
    }
    if (mode == SolverMode::Full) {
      DenseTensor t(dims);
      for (auto& v : t.values()) v = rng.uniform(0.0, 2.0);
      inst.data.push_back(BlockData::full(t));
      inst.targets.push_back(t);
      problem.tensors.push_back(std::move(t));
    } else {
      const Index r_tilde = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(ranks[s]));
      std::vector<Matrix> f;
      for (auto d : dims) f.push_back(rng.uniform_matrix(static_cast<Index>(d), r_tilde, -1.0, 1.0));
      const KruskalTensor approx(std::move(f), rng.uniform_vector(r_tilde, 0.5, 1.5));
      inst.data.push_back(BlockData::compressed(approx));
      inst.targets.push_back(oracle::reconstruct(approx));
      problem.tensors.emplace_back(dims);
    }
  }
  inst.point = initialize(problem, seed);
  for (std::size_t s = 0; s < blocks; ++s) {
    inst.point.weights(s) = rng.uniform_vector(ranks[s], 0.5, 1.5);
  }
  return inst;
}

struct Errors {
  double core = 0.0;
  double factor = 0.0;
  double common = 0.0;
};

inline double block_objective(const DenseTensor& target, const KruskalTensor& k) {
  const DenseTensor x = oracle::reconstruct(k);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = target.values()[i] - x.values()[i];
    total += 0.5 * d * d;
  }
  return total;
}

/// Largest norm-wise relative error of grad_core, grad_factor (block-private
/// view of U^(n,s)) and the summed common-column gradient.
inline Errors check(const Instance& inst) {
  constexpr double kStep = 1e-5;
  Errors e;
  const CoupledFactorSet& f = inst.point;
  for (std::size_t s = 0; s < f.num_blocks(); ++s) {
    const std::vector<Matrix> factors = f.factors(s);
    const Vector lambda = f.weights(s);
    const Vector analytic = grad_core(inst.data[s], factors, lambda);
    const Matrix numeric = oracle::central_difference(
        [&](const Matrix& l) { return block_objective(inst.targets[s], {factors, l}); },
        lambda, kStep);
    e.core = std::max(e.core, oracle::relative_error(analytic, numeric));

    for (std::size_t n = 0; n < f.order(); ++n) {
      const Matrix g = grad_factor(inst.data[s], factors, lambda, n, factors[n]);
      const Matrix fd = oracle::central_difference(
          [&](const Matrix& u) {
            std::vector<Matrix> moved = factors;
            moved[n] = u;
            return block_objective(inst.targets[s], {moved, lambda});
          },
          factors[n], kStep);
      e.factor = std::max(e.factor, oracle::relative_error(g, fd));
    }
  }

  for (std::size_t n = 0; n < f.order(); ++n) {
    const auto l = static_cast<Index>(f.coupled_count(n));
    if (l == 0) continue;
    Matrix analytic = Matrix::Zero(f.common(n).rows(), l);
    for (std::size_t s = 0; s < f.num_blocks(); ++s) {
      const std::vector<Matrix> factors = f.factors(s);
      analytic += grad_factor(inst.data[s], factors, f.weights(s), n, factors[n]).leftCols(l);
    }
    const Matrix fd = oracle::central_difference(
        [&](const Matrix& c) {
          CoupledFactorSet moved = f;
          moved.common(n) = c;
          double total = 0.0;
          for (std::size_t s = 0; s < f.num_blocks(); ++s) {
            total += block_objective(inst.targets[s], moved.block(s));
          }
          return total;
        },
        f.common(n), kStep);
    e.common = std::max(e.common, oracle::relative_error(analytic, fd));
  }
  return e;
}

}  // namespace concpd::gradcheck
