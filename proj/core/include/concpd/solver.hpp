#pragma once

// Coupled nonnegative CP decomposition by alternating proximal gradient, with
// an optional low-rank (unconstrained CP) compression of the data.
//
// Every block s is modelled as [[lambda_s; U^(1,s), ..., U^(N,s)]] with all
// entries >= 0.  The first L_n columns of U^(n,s) are shared by all blocks.
// One iteration updates the cores lambda_1..lambda_S and then, mode by mode,
// the factors of all blocks, each as a projected gradient step taken from an
// extrapolated point with step 1/L, L the block Lipschitz constant.  If the
// objective fails to decrease the iteration is redone without extrapolation.

#include "concpd/cpd_als.hpp"
#include "concpd/kruskal.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace concpd {

enum class SolverMode { Full, Lra };

struct CoupledProblem {
  std::vector<DenseTensor> tensors;  // all >= 0, same order
  std::vector<Index> ranks;          // R^(s)
  std::vector<std::size_t> coupled;  // L_n
  SolverMode mode = SolverMode::Full;
  /// Compression settings for SolverMode::Lra.  rank 0 uses each block's R^(s).
  AlsOptions compression{};
  /// false freezes every lambda at one (the "NC" variant).
  bool update_core = true;

  [[nodiscard]] std::size_t num_blocks() const { return tensors.size(); }
  [[nodiscard]] std::size_t order() const {
    return tensors.empty() ? 0 : tensors.front().order();
  }

  /// Throws std::invalid_argument on any violated invariant: negative data,
  /// mixed orders, a coupled mode whose dimension differs between blocks,
  /// L_n > min_s R^(s), etc.
  void validate() const;
};

struct SolverOptions {
  int max_iter = 1000;
  double tol = 1e-8;
  double delta_w = 0.9999;
  std::uint64_t seed = 0;
  /// Iterations between trace rows; the first and last iterations are always
  /// recorded.
  int trace_every = 1;

  void validate() const;
};

enum class TerminationReason { ToleranceMet, MaxIterations };

[[nodiscard]] const char* to_string(TerminationReason r);

struct TraceRow {
  int iter = 0;
  /// Objective and averaged relative error against the original tensors.
  double objfun = 0.0;
  double relerr = 0.0;
  double elapsed_s = 0.0;
  /// The objective the iteration actually minimizes and checks for restart:
  /// identical to objfun in Full mode, the compressed-data objective in Lra.
  double surrogate = 0.0;
  bool restarted = false;
};

struct SolveResult {
  CoupledFactorSet factors;
  std::vector<TraceRow> trace;
  TerminationReason reason = TerminationReason::MaxIterations;
  int iterations = 0;
  int restarts = 0;
  double objfun = 0.0;
  double relerr = 0.0;
  /// Wall-clock seconds of the solve, compression included, monitoring of
  /// original-tensor metrics in Lra mode excluded.
  double elapsed_s = 0.0;
  double compression_s = 0.0;
  /// Lra only: the rank-R~ approximations used in place of the data.
  std::vector<KruskalTensor> compression;
};

/// Data side of one block's least-squares term.  Holds either the tensor's
/// unfoldings or an unconstrained Kruskal approximation of it; all gradient
/// terms that touch the data go through here.
class BlockData {
 public:
  static BlockData full(const DenseTensor& t);
  /// `approx` weights are folded into its first factor.
  static BlockData compressed(const KruskalTensor& approx);

  [[nodiscard]] bool is_compressed() const { return !approx_.empty(); }
  [[nodiscard]] std::size_t order() const { return dims_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& dims() const { return dims_; }
  [[nodiscard]] double squared_norm() const { return norm_sq_; }
  /// Compression factors (empty for Full data).
  [[nodiscard]] const std::vector<Matrix>& approx() const { return approx_; }

  /// M_(n) (U^(N) (.) ... skip n ... (.) U^(1)), or U~^(n) (U~^T U)^{*-n}
  /// for compressed data.
  [[nodiscard]] Matrix mttkrp(std::span<const Matrix> factors, std::size_t n) const;
  /// (U^(.))^T vec(M), or (U^T U~)^* 1 for compressed data.
  [[nodiscard]] Vector core_projection(std::span<const Matrix> factors) const;
  /// 1/2 ||M - [[lambda; U]]||_F^2.  Full data evaluates the residual
  /// explicitly; compressed data uses the gram expansion.
  [[nodiscard]] double objective(std::span<const Matrix> factors,
                                 const Vector& lambda) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<Matrix> unfoldings_;
  std::vector<Matrix> approx_;
  double norm_sq_ = 0.0;
};

/// Full data for every block, or the ALS compressions in Lra mode (written to
/// `compression` when non-null).
[[nodiscard]] std::vector<BlockData> prepare_data(
    const CoupledProblem& problem, std::uint64_t seed,
    std::vector<KruskalTensor>* compression = nullptr);

/// 1/2 sum_s ||M_s - [[lambda_s; U_s]]||^2 over the given data terms.
[[nodiscard]] double objective(std::span<const BlockData> data,
                               const CoupledFactorSet& f);

/// Objective against the original tensors, by explicit reconstruction.
[[nodiscard]] double objective(const CoupledProblem& problem,
                               const CoupledFactorSet& f);

/// Gradient of the block objective in lambda at `core_hat`:
/// (U^T U)^* core_hat - (U^(.))^T vec(M).
[[nodiscard]] Vector grad_core(const BlockData& data,
                               std::span<const Matrix> factors,
                               const Vector& core_hat);

/// max(0, core_hat - grad / lipschitz).  A zero Lipschitz constant leaves the
/// point unchanged; it throws NumericalError if the gradient is nonzero.
[[nodiscard]] Vector update_core(const Vector& core_hat, const Vector& grad,
                                 double lipschitz);

/// Gradient of the block objective in U^(n) at `factor_hat`:
/// U^ D (U^T U)^{*-n} D - M_(n) U^{(.)-n} D.  factors[n] is ignored.
[[nodiscard]] Matrix grad_factor(const BlockData& data,
                                 std::span<const Matrix> factors,
                                 const Vector& lambda, std::size_t n,
                                 const Matrix& factor_hat);

/// ||(U^T U)^*||_2
[[nodiscard]] double lipschitz_core(std::span<const Matrix> factors);

/// ||D (U^T U)^{*-n} D||_2
[[nodiscard]] double lipschitz_factor(std::span<const Matrix> factors,
                                      const Vector& lambda, std::size_t n);

/// min(w_hat, delta_w * sqrt(l_prev / l_cur)); 0 when l_cur is not positive.
[[nodiscard]] double extrapolation_weight(double w_hat, double l_prev,
                                          double l_cur, double delta_w);

/// t_0 = 1, t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2; hands out
/// w_hat_{k-1} = (t_{k-1} - 1) / t_k one iteration at a time.
class MomentumSequence {
 public:
  [[nodiscard]] double t() const { return t_; }
  double advance();

 private:
  double t_ = 1.0;
};

/// current + w (current - previous)
template <typename Derived>
[[nodiscard]] auto extrapolate(const Eigen::MatrixBase<Derived>& current,
                               const Eigen::MatrixBase<Derived>& previous,
                               double w) {
  return (current + w * (current - previous)).eval();
}

/// Inputs of one block's mode-n update.
struct FactorStep {
  Matrix point;     // extrapolated U^(n,s), I_n x R_s
  Matrix gradient;  // at `point`
  double lipschitz = 0.0;
};

/// Projected gradient update of mode n for every block.  With L_n > 0 the
/// shared columns take one step using the summed gradients and summed
/// Lipschitz constants; the remaining columns step per block.  The shared
/// extrapolated point is read from steps[0].point.
void update_factors(CoupledFactorSet& f, std::size_t n,
                    std::span<const FactorStep> steps);

/// Uniform [0, 1) factors with the common block drawn once; lambda uniform
/// [0, 1), or all ones when the core is frozen.
[[nodiscard]] CoupledFactorSet initialize(const CoupledProblem& problem,
                                          std::uint64_t seed);

struct StepReport {
  double objective = 0.0;  // accepted surrogate objective
  double rel_err = 0.0;    // averaged, against the data the solver sees
  bool restarted = false;
  /// Objective of the extrapolated sweep when it was rejected.
  double rejected_objective = 0.0;
};

struct SolverState {
  CoupledFactorSet current;
  CoupledFactorSet previous;
  MomentumSequence momentum;
  std::vector<double> core_lipschitz;                 // [s]
  std::vector<std::vector<double>> factor_lipschitz;  // [s][n]
  std::vector<double> objective_history;              // F(0), F(1), ...
  std::vector<double> rel_err_history;
  int iteration = 0;
};

class CoupledSolver {
 public:
  /// `problem` must outlive the solver.
  CoupledSolver(const CoupledProblem& problem, const SolverOptions& opts);
  CoupledSolver(const CoupledProblem& problem, const SolverOptions& opts,
                CoupledFactorSet initial);

  /// One full iteration including the restart rule.
  StepReport step();
  /// Iterates until the relative error change drops below tol or max_iter.
  SolveResult run();

  [[nodiscard]] const SolverState& state() const { return state_; }
  [[nodiscard]] std::span<const BlockData> data() const { return data_; }

 private:
  struct Sweep {
    CoupledFactorSet next;
    std::vector<double> core_lipschitz;
    std::vector<std::vector<double>> factor_lipschitz;
  };

  void setup(CoupledFactorSet initial);
  Sweep sweep(double w_hat, bool extrapolate) const;
  [[nodiscard]] double averaged_rel_err(const CoupledFactorSet& f,
                                        double* objective_out) const;
  TraceRow monitor(int iter, double surrogate, bool restarted) const;

  const CoupledProblem& problem_;
  SolverOptions opts_;
  std::vector<BlockData> data_;
  std::vector<KruskalTensor> compression_;
  std::vector<double> data_norms_;
  SolverState state_;
  double compression_s_ = 0.0;
};

[[nodiscard]] SolveResult solve(const CoupledProblem& problem,
                                const SolverOptions& opts);

}  // namespace concpd
