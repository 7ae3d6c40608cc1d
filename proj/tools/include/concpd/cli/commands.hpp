#pragma once

// Subcommands of the concpd tool.  Each cmd_* works on a resolved config and
// writes its artifacts plus a config.resolved file into the output directory.

#include "concpd/io.hpp"
#include "concpd/metrics.hpp"
#include "concpd/solver.hpp"
#include "concpd/synthgen.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace concpd::cli {

struct GenerateConfig {
  SynthSpec spec;
  fs::path out;
};

struct SolveConfig {
  fs::path problem;  // problem manifest
  fs::path out;
  SolverMode mode = SolverMode::Full;
  bool update_core = true;
  SolverOptions solver;
  AlsOptions compression;
};

struct BenchConfig {
  std::vector<std::size_t> sizes{2, 3};
  int repeats = 3;
  std::vector<std::string> variants{"full", "lra", "full-nc", "lra-nc"};
  std::size_t blocks = 10;
  double snr_db = 20.0;
  std::uint64_t seed = 0;
  SolverOptions solver;
  /// Requested workers; RUN_THREADS caps it.
  int threads = 1;
  fs::path out;
};

struct EvalConfig {
  fs::path problem;
  fs::path model;  // coupled-set manifest
  /// Defaults to the problem manifest's truth entry.
  std::optional<fs::path> truth;
  fs::path out;
};

struct SolveOutcome {
  SolveResult result;
  MetricReport metrics;
};

struct BenchRow {
  std::size_t n = 0;
  std::string variant;
  int repeat = 0;
  double pi = 0.0;
  double tenfit = 0.0;
  double time_s = 0.0;
  double objfun = 0.0;
  bool ok = true;
  std::string error;
};

struct BenchOutcome {
  std::vector<BenchRow> rows;
  int failures = 0;
  int workers = 1;
};

/// "full", "lra", "full-nc" or "lra-nc" applied to a problem.
void apply_variant(CoupledProblem& problem, const std::string& variant);

/// Worker count after the RUN_THREADS cap.
[[nodiscard]] int effective_threads(int requested);

/// Metrics of `factors` against the problem tensors, with PI when a truth
/// set is given.
[[nodiscard]] MetricReport evaluate(const CoupledProblem& problem,
                                    const CoupledFactorSet& factors,
                                    const CoupledFactorSet* truth);

void cmd_generate(const GenerateConfig& cfg);
SolveOutcome cmd_solve(const SolveConfig& cfg);
BenchOutcome cmd_bench(const BenchConfig& cfg);
MetricReport cmd_eval(const EvalConfig& cfg);

/// Parses the command line (with optional --config file) and dispatches.
/// Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace concpd::cli
