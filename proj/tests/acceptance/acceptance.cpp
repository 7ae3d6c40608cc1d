// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.  Every solver run made here contributes its trace to the
// monotonicity check.

#include "concpd/metrics.hpp"
#include "concpd/solver.hpp"
#include "concpd/synthgen.hpp"

#include "gradcheck.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace concpd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Traces of every solve, for criterion 4.
std::vector<std::pair<std::string, std::vector<TraceRow>>> g_traces;

SolveResult traced_solve(const CoupledProblem& p, const SolverOptions& o, std::string label) {
  SolveResult r = solve(p, o);
  g_traces.emplace_back(std::move(label), r.trace);
  return r;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pi_mean(const CoupledFactorSet& est, const CoupledFactorSet& truth) {
  return mean(performance_index_per_mode(est, truth));
}

std::vector<DenseTensor> reconstructions(const CoupledFactorSet& f) {
  std::vector<DenseTensor> out;
  for (std::size_t s = 0; s < f.num_blocks(); ++s) out.push_back(reconstruct(f.block(s)));
  return out;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (SolverMode mode : {SolverMode::Full, SolverMode::Lra}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto e = gradcheck::check(gradcheck::make_instance(seed, mode));
      worst = std::max({worst, e.core, e.factor, e.common});
    }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-6 && t < 60.0,
          fmt("worst relative error %.2e over 2 x 20 instances (%.1f s)", worst, t)};
}

Outcome identities() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(2, 0xACC));
  double worst = 0.0;
  auto track = [&](const Matrix& got, const Matrix& want) {
    worst = std::max(worst, oracle::relative_error(got, want));
  };
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t order = 2 + static_cast<std::size_t>(rng.uniform() * 3);
    const Index r = 1 + static_cast<Index>(rng.uniform() * 5);
    const Index r_tilde = 1 + static_cast<Index>(rng.uniform() * 5);
    std::vector<std::size_t> dims;
    std::vector<Matrix> us, approx;
    for (std::size_t n = 0; n < order; ++n) {
      dims.push_back(1 + static_cast<std::size_t>(rng.uniform() * 5));
      us.push_back(rng.uniform_matrix(static_cast<Index>(dims[n]), r));
      approx.push_back(rng.uniform_matrix(static_cast<Index>(dims[n]), r_tilde, -1.0, 1.0));
    }

    // (U^(N) (.) ... (.) U^(1))^T (same) = hadamard of the grams.
    const Matrix kr = oracle::kr_descending(us, order);
    track(hadamard_gram(us), kr.transpose() * kr);
    track(khatri_rao_descending(us), kr);

    // vec / matricize / fold consistency.
    DenseTensor t(dims);
    for (double& v : t.values()) v = rng.normal();
    for (std::size_t n = 0; n < order; ++n) {
      track(matricize(t, n), oracle::unfold(t, n));
      track(fold(matricize(t, n), n, dims).as_vector(), t.as_vector());
    }
    track(vectorize(t), oracle::unfold(t, 0).reshaped());

    // Compressed-data forms against the explicit reconstruction.
    const KruskalTensor k(approx);
    const DenseTensor m = oracle::reconstruct(k);
    const BlockData lra = BlockData::compressed(k);
    track(lra.core_projection(us), kr.transpose() * vectorize(m));
    for (std::size_t n = 0; n < order; ++n) {
      track(lra.mttkrp(us, n), oracle::unfold(m, n) * oracle::kr_descending(us, n));
    }
    const Vector lambda = rng.uniform_vector(r, 0.5, 1.5);
    const double explicit_obj = 0.5 * (vectorize(m) - kr * lambda).squaredNorm();
    worst = std::max(worst, std::abs(lra.objective(us, lambda) - explicit_obj) /
                                std::max(explicit_obj, 1.0));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-10 && t < 60.0,
          fmt("worst relative deviation %.2e over 200 sweeps (%.1f s)", worst, t)};
}

Outcome exact_recovery() {
  const auto t0 = Clock::now();
  int ok = 0;
  std::string runs;
  for (std::uint64_t k = 0; k < 10; ++k) {
    SynthSpec spec;
    spec.blocks = 3;
    spec.dims = std::vector<std::size_t>{16, 18, 20};
    spec.rank = 9;
    spec.coupled = std::vector<std::size_t>{4, 4, 4};
    spec.snr_db = kInf;
    spec.seed = k;
    const SynthProblem g = generate(spec);
    SolverOptions o;
    o.seed = k;
    const SolveResult r = traced_solve(g.problem, o, "recovery seed " + std::to_string(k));
    const double pi = pi_mean(r.factors, g.truth);
    const bool hit = r.relerr < 1e-3 && pi < 0.05;
    ok += hit;
    runs += fmt(" %c", hit ? '+' : '-');
  }
  const double t = seconds_since(t0);
  return {ok >= 7 && t < 600.0,
          fmt("%d/10 runs recovered [%s ] (%.0f s)", ok, runs.c_str() + 1, t)};
}

Outcome lra_fidelity() {
  std::vector<double> full, lra;
  for (std::uint64_t k = 0; k < 5; ++k) {
    SynthSpec spec;
    spec.size_factor = 2;
    spec.snr_db = 20.0;
    spec.seed = k;
    SynthProblem g = generate(spec);
    SolverOptions o;
    o.seed = k;
    for (SolverMode mode : {SolverMode::Full, SolverMode::Lra}) {
      g.problem.mode = mode;
      const SolveResult r = traced_solve(g.problem, o, "fidelity seed " + std::to_string(k));
      (mode == SolverMode::Full ? full : lra)
          .push_back(ten_fit(g.problem.tensors, reconstructions(r.factors)));
    }
  }
  const double gap = std::abs(mean(full) - mean(lra));
  return {gap < 0.02, fmt("mean TenFit full %.4f, lra %.4f, gap %.4f", mean(full), mean(lra), gap)};
}

// Seconds per iteration excluding compression, best of three.
double per_iteration(const CoupledProblem& p, const std::string& label) {
  SolverOptions o;
  o.tol = 0.0;
  o.max_iter = 15;
  double best = kInf;
  for (int rep = 0; rep < 3; ++rep) {
    o.seed = static_cast<std::uint64_t>(rep);
    const SolveResult r = traced_solve(p, o, label);
    best = std::min(best, (r.elapsed_s - r.compression_s) / r.iterations);
  }
  return best;
}

Outcome lra_speedup() {
  std::vector<double> ratio;
  for (std::size_t n : {4, 8}) {
    SynthSpec spec;
    spec.blocks = 2;
    spec.size_factor = n;
    spec.seed = 1;
    SynthProblem g = generate(spec);
    const double full = per_iteration(g.problem, "speedup full n=" + std::to_string(n));
    g.problem.mode = SolverMode::Lra;
    const double lra = per_iteration(g.problem, "speedup lra n=" + std::to_string(n));
    ratio.push_back(full / lra);
  }
  return {ratio[0] > 1.0 && ratio[1] > ratio[0],
          fmt("Full/Lra time per iteration %.2f at n=4, %.2f at n=8", ratio[0], ratio[1])};
}

Outcome nc_ordering() {
  // Order: full, full-nc, lra, lra-nc.
  std::vector<std::vector<double>> pi(4);
  for (std::uint64_t k = 0; k < 5; ++k) {
    SynthSpec spec;
    spec.size_factor = 2;
    spec.snr_db = kInf;
    spec.seed = k;
    SynthProblem g = generate(spec);
    SolverOptions o;
    o.seed = k;
    for (int v = 0; v < 4; ++v) {
      g.problem.mode = v < 2 ? SolverMode::Full : SolverMode::Lra;
      g.problem.update_core = v % 2 == 0;
      const SolveResult r = traced_solve(g.problem, o, "nc seed " + std::to_string(k));
      pi[static_cast<std::size_t>(v)].push_back(pi_mean(r.factors, g.truth));
    }
  }
  const double f = mean(pi[0]), fnc = mean(pi[1]), l = mean(pi[2]), lnc = mean(pi[3]);
  return {f <= fnc && l <= lnc,
          fmt("mean PI full %.4f <= full-nc %.4f, lra %.4f <= lra-nc %.4f", f, fnc, l, lnc)};
}

Outcome metric_sanity() {
  Rng rng(derive_seed(8, 0xACC));
  const Matrix a = rng.uniform_matrix(7, 5);
  Matrix permuted(7, 5);
  const int perm[5] = {3, 0, 4, 1, 2};
  for (Index r = 0; r < 5; ++r) permuted.col(r) = (0.5 + r) * a.col(perm[r]);
  const double pi = performance_index(permuted, a);

  std::vector<DenseTensor> m, x;
  for (int s = 0; s < 3; ++s) {
    DenseTensor t({4, 3, 2}), u({4, 3, 2});
    for (double& v : t.values()) v = rng.uniform();
    for (double& v : u.values()) v = rng.uniform();
    m.push_back(t);
    x.push_back(u);
  }
  const double sum = ten_fit(m, x) + rel_err(m, x);

  std::array<Vector, 4> templates;
  std::array<Matrix, 4> candidates;
  for (std::size_t d = 0; d < 4; ++d) {
    templates[d] = rng.uniform_vector(6, 0.0, 1.0);
    candidates[d] = rng.uniform_matrix(6, 3);
    candidates[d].col(1) = 2.0 * templates[d];
  }
  const double match = mcc(templates, candidates);

  DenseTensor zero({2, 2}), peak({2, 2});
  peak.values()[0] = peak.values()[1] = peak.values()[2] = peak.values()[3] = 255.0;
  const double db = psnr(std::vector{zero}, std::vector{peak}, 255.0);

  const bool pass = std::abs(pi) < 1e-10 && std::abs(sum - 1.0) < 1e-14 &&
                    std::abs(match - 1.0) < 1e-12 && std::abs(db) < 1e-12;
  return {pass, fmt("PI %.1e, TenFit+RelErr-1 %.1e, MCC %.15f, PSNR %.1e dB", pi, sum - 1.0,
                    match, db)};
}

Outcome denoising() {
  std::vector<double> gains;
  for (std::uint64_t k = 0; k < 3; ++k) {
    SynthSpec spec;
    spec.blocks = 5;
    spec.dims = std::vector<std::size_t>{32, 32, 16};
    spec.rank = 12;
    spec.coupled = std::vector<std::size_t>{6, 6, 6};
    spec.snr_db = kInf;
    spec.seed = k;
    SynthProblem g = generate(spec);
    double max = 0.0;
    for (const auto& t : g.problem.tensors) max = std::max(max, t.as_vector().maxCoeff());
    std::vector<DenseTensor> clean;
    for (auto& t : g.problem.tensors) {
      t.as_vector() *= 255.0 / max;
      clean.push_back(t);
    }

    NoiseSpec noise;
    noise.kind = NoiseKind::SaltPepper;
    noise.density = 0.1;
    noise.peak = 255.0;
    for (std::size_t s = 0; s < clean.size(); ++s) {
      g.problem.tensors[s] = add_noise(clean[s], noise, derive_seed(k, s));
    }
    SolverOptions o;
    o.seed = k;
    const SolveResult r = traced_solve(g.problem, o, "denoise seed " + std::to_string(k));
    gains.push_back(psnr(clean, reconstructions(r.factors)) - psnr(clean, g.problem.tensors));
  }
  return {mean(gains) >= 3.0,
          fmt("mean PSNR gain %.2f dB (runs %.2f, %.2f, %.2f)", mean(gains), gains[0], gains[1],
              gains[2])};
}

Outcome monotonicity() {
  std::size_t rows = 0, violations = 0;
  std::string first;
  for (const auto& [label, trace] : g_traces) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
      ++rows;
      const double prev = trace[i - 1].surrogate;
      if (trace[i].surrogate > prev + 1e-10 * std::abs(prev)) {
        if (violations++ == 0) first = fmt(", first in %s at iteration %d", label.c_str(), trace[i].iter);
      }
    }
  }
  return {violations == 0 && rows > 0,
          fmt("%zu violations over %zu steps in %zu runs%s", violations, rows, g_traces.size(),
              first.c_str())};
}

}  // namespace
}  // namespace concpd

int main() {
  using namespace concpd;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Monotonicity inspects the traces of every other run, so it goes last.
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradients},   {2, "algebraic identities", identities},
      {3, "exact recovery", exact_recovery},    {5, "lra fidelity", lra_fidelity},
      {6, "lra speedup trend", lra_speedup},    {7, "nc ordering", nc_ordering},
      {8, "metric sanity", metric_sanity},      {9, "denoising", denoising},
      {4, "monotonicity with restart", monotonicity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
