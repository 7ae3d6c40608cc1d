#include "concpd/solver.hpp"

#include "concpd/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace concpd {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string block_label(std::size_t s) { return "block " + std::to_string(s + 1); }

}  // namespace

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::ToleranceMet:
      return "ToleranceMet";
    case TerminationReason::MaxIterations:
      return "MaxIterations";
  }
  return "unknown";
}

void CoupledProblem::validate() const {
  if (tensors.empty()) throw std::invalid_argument("problem has no tensors");
  if (ranks.size() != tensors.size()) {
    throw std::invalid_argument("problem lists " + std::to_string(ranks.size()) +
                                " ranks for " + std::to_string(tensors.size()) +
                                " tensors");
  }
  const std::size_t n_modes = order();
  if (coupled.size() != n_modes) {
    throw std::invalid_argument("problem lists " + std::to_string(coupled.size()) +
                                " coupled counts for order " +
                                std::to_string(n_modes));
  }
  const Index min_rank = *std::min_element(ranks.begin(), ranks.end());
  if (min_rank < 1) throw std::invalid_argument("every rank must be >= 1");
  for (std::size_t s = 0; s < tensors.size(); ++s) {
    const auto& t = tensors[s];
    if (t.order() != n_modes) {
      throw std::invalid_argument(block_label(s) + " has order " +
                                  std::to_string(t.order()) + ", expected " +
                                  std::to_string(n_modes));
    }
    if (!t.all_finite()) {
      throw std::invalid_argument(block_label(s) + " holds non-finite values");
    }
    if (!t.is_nonnegative()) {
      throw std::invalid_argument(block_label(s) + " holds negative values");
    }
  }
  for (std::size_t n = 0; n < n_modes; ++n) {
    if (static_cast<Index>(coupled[n]) > min_rank) {
      throw std::invalid_argument(
          "mode " + std::to_string(n + 1) + " couples " +
          std::to_string(coupled[n]) + " components but the smallest rank is " +
          std::to_string(min_rank));
    }
    if (coupled[n] == 0) continue;
    for (std::size_t s = 1; s < tensors.size(); ++s) {
      if (tensors[s].dim(n) != tensors[0].dim(n)) {
        throw std::invalid_argument(
            "mode " + std::to_string(n + 1) + " is coupled but " +
            block_label(s) + " has dimension " +
            std::to_string(tensors[s].dim(n)) + " vs " +
            std::to_string(tensors[0].dim(n)) + " in block 1");
      }
    }
  }
  if (mode == SolverMode::Lra) {
    if (compression.rank < 0) {
      throw std::invalid_argument("compression rank must be >= 0");
    }
    if (!(compression.tol > 0.0) || compression.max_iter < 0) {
      throw std::invalid_argument("invalid compression options");
    }
  }
}

void SolverOptions::validate() const {
  if (max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be >= 0");
  if (!(delta_w > 0.0 && delta_w < 1.0)) {
    throw std::invalid_argument("delta_w must lie in (0, 1)");
  }
  if (trace_every < 1) throw std::invalid_argument("trace_every must be >= 1");
}

// ---------------------------------------------------------------------------
// Data terms

BlockData BlockData::full(const DenseTensor& t) {
  BlockData d;
  d.dims_ = t.dims();
  for (std::size_t n = 0; n < t.order(); ++n) d.unfoldings_.push_back(matricize(t, n));
  d.norm_sq_ = t.as_vector().squaredNorm();
  return d;
}

BlockData BlockData::compressed(const KruskalTensor& approx) {
  approx.validate();
  BlockData d;
  d.dims_ = approx.dims();
  d.approx_ = approx.factors;
  d.approx_.front() = d.approx_.front() * approx.weights.asDiagonal();
  d.norm_sq_ = hadamard_gram(d.approx_).sum();
  return d;
}

Matrix BlockData::mttkrp(std::span<const Matrix> factors, std::size_t n) const {
  if (is_compressed()) {
    return approx_[n] * hadamard_cross_gram(approx_, factors, n);
  }
  return unfoldings_[n] * khatri_rao_descending(factors, n);
}

Vector BlockData::core_projection(std::span<const Matrix> factors) const {
  if (is_compressed()) {
    return hadamard_cross_gram(factors, approx_).rowwise().sum();
  }
  // (U^(.))^T vec(M) = colsum(U^(1) * (M_(1) U^{(.)-1}))
  const Matrix m = mttkrp(factors, 0);
  return (factors[0].array() * m.array()).colwise().sum().transpose();
}

double BlockData::objective(std::span<const Matrix> factors,
                            const Vector& lambda) const {
  if (is_compressed()) {
    const double cross = lambda.dot(core_projection(factors));
    const double model = lambda.dot(hadamard_gram(factors) * lambda);
    return 0.5 * std::max(norm_sq_ - 2.0 * cross + model, 0.0);
  }
  const Matrix model =
      (factors[0] * lambda.asDiagonal()) * khatri_rao_descending(factors, 0).transpose();
  return 0.5 * (unfoldings_[0] - model).squaredNorm();
}

std::vector<BlockData> prepare_data(const CoupledProblem& problem,
                                    std::uint64_t seed,
                                    std::vector<KruskalTensor>* compression) {
  std::vector<BlockData> data;
  data.reserve(problem.num_blocks());
  for (std::size_t s = 0; s < problem.num_blocks(); ++s) {
    if (problem.mode == SolverMode::Full) {
      data.push_back(BlockData::full(problem.tensors[s]));
      continue;
    }
    AlsOptions als = problem.compression;
    if (als.rank == 0) als.rank = problem.ranks[s];
    als.seed = derive_seed(seed, 0x1000 + s);
    AlsResult approx = cpd_als(problem.tensors[s], als);
    data.push_back(BlockData::compressed(approx.model));
    if (compression) compression->push_back(std::move(approx.model));
  }
  return data;
}

double objective(std::span<const BlockData> data, const CoupledFactorSet& f) {
  double total = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    total += data[s].objective(f.factors(s), f.weights(s));
  }
  return total;
}

double objective(const CoupledProblem& problem, const CoupledFactorSet& f) {
  double total = 0.0;
  for (std::size_t s = 0; s < problem.num_blocks(); ++s) {
    const DenseTensor x = reconstruct(f.block(s));
    total += 0.5 * (problem.tensors[s].as_vector() - x.as_vector()).squaredNorm();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Block updates

Vector grad_core(const BlockData& data, std::span<const Matrix> factors,
                 const Vector& core_hat) {
  return hadamard_gram(factors) * core_hat - data.core_projection(factors);
}

Vector update_core(const Vector& core_hat, const Vector& grad, double lipschitz) {
  if (!(lipschitz > 0.0)) {
    if (!grad.isZero(0.0)) {
      throw NumericalError(
          "core update: zero Lipschitz constant with a nonzero gradient");
    }
    return core_hat.cwiseMax(0.0);
  }
  return (core_hat - grad / lipschitz).cwiseMax(0.0);
}

Matrix grad_factor(const BlockData& data, std::span<const Matrix> factors,
                   const Vector& lambda, std::size_t n, const Matrix& factor_hat) {
  const auto d = lambda.asDiagonal();
  const Matrix curvature = d * hadamard_gram(factors, n) * d;
  return factor_hat * curvature - data.mttkrp(factors, n) * d;
}

double lipschitz_core(std::span<const Matrix> factors) {
  return spectral_norm(hadamard_gram(factors));
}

double lipschitz_factor(std::span<const Matrix> factors, const Vector& lambda,
                        std::size_t n) {
  const auto d = lambda.asDiagonal();
  const Matrix curvature = d * hadamard_gram(factors, n) * d;
  return spectral_norm(curvature);
}

double extrapolation_weight(double w_hat, double l_prev, double l_cur,
                            double delta_w) {
  if (!(l_cur > 0.0) || !(l_prev >= 0.0)) return 0.0;
  return std::min(w_hat, delta_w * std::sqrt(l_prev / l_cur));
}

double MomentumSequence::advance() {
  const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_ * t_));
  const double w_hat = (t_ - 1.0) / next;
  t_ = next;
  return w_hat;
}

namespace {

Matrix projected_step(const Matrix& point, const Matrix& grad, double lipschitz,
                      std::size_t n, const char* what) {
  if (!(lipschitz > 0.0)) {
    if (!grad.isZero(0.0)) {
      throw NumericalError(std::string(what) + " update of mode " +
                           std::to_string(n + 1) +
                           ": zero Lipschitz constant with a nonzero gradient");
    }
    return point.cwiseMax(0.0);
  }
  return (point - grad / lipschitz).cwiseMax(0.0);
}

}  // namespace

void update_factors(CoupledFactorSet& f, std::size_t n,
                    std::span<const FactorStep> steps) {
  if (steps.size() != f.num_blocks()) {
    throw std::invalid_argument("update_factors: one step per block required");
  }
  const auto l = static_cast<Index>(f.coupled_count(n));
  if (l > 0) {
    Matrix grad_sum = Matrix::Zero(f.common(n).rows(), l);
    double lipschitz_sum = 0.0;
    for (const auto& st : steps) {
      grad_sum += st.gradient.leftCols(l);
      lipschitz_sum += st.lipschitz;
    }
    f.common(n) =
        projected_step(steps[0].point.leftCols(l), grad_sum, lipschitz_sum, n, "common");
  }
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const Index rest = steps[s].point.cols() - l;
    f.individual(s, n) = projected_step(steps[s].point.rightCols(rest),
                                        steps[s].gradient.rightCols(rest),
                                        steps[s].lipschitz, n, "individual");
  }
}

CoupledFactorSet initialize(const CoupledProblem& problem, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x1417));
  const std::size_t order = problem.order();
  std::vector<Matrix> common;
  for (std::size_t n = 0; n < order; ++n) {
    common.push_back(rng.uniform_matrix(static_cast<Index>(problem.tensors[0].dim(n)),
                                        static_cast<Index>(problem.coupled[n])));
  }
  std::vector<std::vector<Matrix>> individual(problem.num_blocks());
  std::vector<Vector> weights;
  for (std::size_t s = 0; s < problem.num_blocks(); ++s) {
    for (std::size_t n = 0; n < order; ++n) {
      individual[s].push_back(rng.uniform_matrix(
          static_cast<Index>(problem.tensors[s].dim(n)),
          problem.ranks[s] - static_cast<Index>(problem.coupled[n])));
    }
  }
  for (std::size_t s = 0; s < problem.num_blocks(); ++s) {
    weights.push_back(problem.update_core ? rng.uniform_vector(problem.ranks[s])
                                          : Vector::Ones(problem.ranks[s]));
  }
  return {std::move(common), std::move(individual), std::move(weights)};
}

// ---------------------------------------------------------------------------
// Solver

CoupledSolver::CoupledSolver(const CoupledProblem& problem,
                             const SolverOptions& opts)
    : problem_(problem), opts_(opts) {
  problem_.validate();
  opts_.validate();
  setup(initialize(problem_, opts_.seed));
}

CoupledSolver::CoupledSolver(const CoupledProblem& problem,
                             const SolverOptions& opts, CoupledFactorSet initial)
    : problem_(problem), opts_(opts) {
  problem_.validate();
  opts_.validate();
  if (initial.num_blocks() != problem_.num_blocks() ||
      initial.coupled_counts() != problem_.coupled) {
    throw std::invalid_argument("initial factors do not match the problem");
  }
  setup(std::move(initial));
}

void CoupledSolver::setup(CoupledFactorSet initial) {
  const auto start = Clock::now();
  data_ = prepare_data(problem_, opts_.seed, &compression_);
  compression_s_ = problem_.mode == SolverMode::Lra ? seconds_since(start) : 0.0;
  for (const auto& d : data_) data_norms_.push_back(std::sqrt(d.squared_norm()));

  state_.current = std::move(initial);
  state_.previous = state_.current;
  state_.core_lipschitz.assign(problem_.num_blocks(), 0.0);
  state_.factor_lipschitz.assign(problem_.num_blocks(),
                                 std::vector<double>(problem_.order(), 0.0));
  double f0 = 0.0;
  const double r0 = averaged_rel_err(state_.current, &f0);
  state_.objective_history.push_back(f0);
  state_.rel_err_history.push_back(r0);
}

double CoupledSolver::averaged_rel_err(const CoupledFactorSet& f,
                                       double* objective_out) const {
  double total = 0.0;
  double rel = 0.0;
  for (std::size_t s = 0; s < data_.size(); ++s) {
    const double fs = data_[s].objective(f.factors(s), f.weights(s));
    if (!std::isfinite(fs)) {
      throw NumericalError("objective is not finite at iteration " +
                           std::to_string(state_.iteration) + " in " +
                           block_label(s));
    }
    total += fs;
    if (data_norms_[s] > 0.0) rel += std::sqrt(2.0 * fs) / data_norms_[s];
  }
  if (objective_out) *objective_out = total;
  return rel / static_cast<double>(data_.size());
}

CoupledSolver::Sweep CoupledSolver::sweep(double w_hat, bool extrapolate) const {
  const CoupledFactorSet& cur = state_.current;
  const CoupledFactorSet& prev = state_.previous;
  const std::size_t blocks = problem_.num_blocks();
  const std::size_t order = problem_.order();
  const double dw = opts_.delta_w;

  Sweep out{cur, std::vector<double>(blocks, 0.0),
            std::vector<std::vector<double>>(blocks, std::vector<double>(order, 0.0))};
  CoupledFactorSet& next = out.next;

  auto weight = [&](double l_prev, double l_cur) {
    return extrapolate ? extrapolation_weight(w_hat, l_prev, l_cur, dw) : 0.0;
  };

  if (problem_.update_core) {
    for (std::size_t s = 0; s < blocks; ++s) {
      const std::vector<Matrix> factors = next.factors(s);
      const double ld = lipschitz_core(factors);
      const double w = weight(state_.core_lipschitz[s], ld);
      const Vector core_hat = concpd::extrapolate(cur.weights(s), prev.weights(s), w);
      const Vector grad = grad_core(data_[s], factors, core_hat);
      next.weights(s) = update_core(core_hat, grad, ld);
      out.core_lipschitz[s] = ld;
    }
  }

  std::vector<FactorStep> steps(blocks);
  std::vector<std::vector<Matrix>> factors(blocks);
  for (std::size_t n = 0; n < order; ++n) {
    double l_sum = 0.0;
    double l_sum_prev = 0.0;
    for (std::size_t s = 0; s < blocks; ++s) {
      factors[s] = next.factors(s);
      steps[s].lipschitz = lipschitz_factor(factors[s], next.weights(s), n);
      out.factor_lipschitz[s][n] = steps[s].lipschitz;
      l_sum += steps[s].lipschitz;
      l_sum_prev += state_.factor_lipschitz[s][n];
    }
    // The shared block is one variable whose Lipschitz constant is the sum
    // over blocks, so its weight uses the summed constants.
    const Matrix common_hat = concpd::extrapolate(cur.common(n), prev.common(n),
                                                  weight(l_sum_prev, l_sum));
    for (std::size_t s = 0; s < blocks; ++s) {
      const double w = weight(state_.factor_lipschitz[s][n], steps[s].lipschitz);
      const Matrix individual_hat =
          concpd::extrapolate(cur.individual(s, n), prev.individual(s, n), w);
      steps[s].point.resize(individual_hat.rows(),
                            common_hat.cols() + individual_hat.cols());
      steps[s].point << common_hat, individual_hat;
      steps[s].gradient =
          grad_factor(data_[s], factors[s], next.weights(s), n, steps[s].point);
    }
    update_factors(next, n, steps);
  }
  return out;
}

StepReport CoupledSolver::step() {
  ++state_.iteration;
  const double w_hat = state_.momentum.advance();
  const double f_prev = state_.objective_history.back();

  StepReport report;
  Sweep accepted = sweep(w_hat, true);
  double f_new = 0.0;
  double rel = averaged_rel_err(accepted.next, &f_new);
  if (f_new >= f_prev && state_.iteration > 1) {
    // Redo the iteration from the non-extrapolated point.
    report.restarted = true;
    report.rejected_objective = f_new;
    accepted = sweep(w_hat, false);
    rel = averaged_rel_err(accepted.next, &f_new);
  }
  state_.previous = std::move(state_.current);
  state_.current = std::move(accepted.next);
  if (problem_.update_core) state_.core_lipschitz = std::move(accepted.core_lipschitz);
  state_.factor_lipschitz = std::move(accepted.factor_lipschitz);
  state_.objective_history.push_back(f_new);
  state_.rel_err_history.push_back(rel);

  report.objective = f_new;
  report.rel_err = rel;
  return report;
}

TraceRow CoupledSolver::monitor(int iter, double surrogate, bool restarted) const {
  TraceRow row;
  row.iter = iter;
  row.surrogate = surrogate;
  row.restarted = restarted;
  if (problem_.mode == SolverMode::Full) {
    row.objfun = surrogate;
    row.relerr = state_.rel_err_history.back();
    return row;
  }
  double rel = 0.0;
  for (std::size_t s = 0; s < problem_.num_blocks(); ++s) {
    const DenseTensor x = reconstruct(state_.current.block(s));
    const auto& m = problem_.tensors[s];
    const double residual = (m.as_vector() - x.as_vector()).norm();
    row.objfun += 0.5 * residual * residual;
    const double norm = m.frobenius_norm();
    if (norm > 0.0) rel += residual / norm;
  }
  row.relerr = rel / static_cast<double>(problem_.num_blocks());
  return row;
}

SolveResult CoupledSolver::run() {
  SolveResult result;
  double monitoring_s = 0.0;
  const auto start = Clock::now();
  auto elapsed = [&] { return compression_s_ + seconds_since(start) - monitoring_s; };
  auto record = [&](int iter, double surrogate, bool restarted) {
    const double at = elapsed();
    const auto mon_start = Clock::now();
    TraceRow row = monitor(iter, surrogate, restarted);
    monitoring_s += seconds_since(mon_start);
    row.elapsed_s = at;
    result.trace.push_back(row);
  };

  record(state_.iteration, state_.objective_history.back(), false);
  result.reason = TerminationReason::MaxIterations;
  for (int k = 0; k < opts_.max_iter; ++k) {
    const double rel_prev = state_.rel_err_history.back();
    const StepReport rep = step();
    if (rep.restarted) ++result.restarts;
    const bool done = std::abs(rep.rel_err - rel_prev) < opts_.tol;
    const bool last = done || k + 1 == opts_.max_iter;
    if (last || state_.iteration % opts_.trace_every == 0) {
      record(state_.iteration, rep.objective, rep.restarted);
    }
    if (done) {
      result.reason = TerminationReason::ToleranceMet;
      break;
    }
  }

  result.elapsed_s = elapsed();
  result.compression_s = compression_s_;
  result.iterations = state_.iteration;
  result.factors = state_.current;
  result.objfun = result.trace.back().objfun;
  result.relerr = result.trace.back().relerr;
  result.compression = compression_;
  return result;
}

SolveResult solve(const CoupledProblem& problem, const SolverOptions& opts) {
  CoupledSolver solver(problem, opts);
  return solver.run();
}

}  // namespace concpd
