#include "concpd/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace concpd::cli {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string mode_name(SolverMode m) { return m == SolverMode::Full ? "full" : "lra"; }

template <typename T>
std::string join(const std::vector<T>& v, char sep) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

std::string boolean(bool b) { return b ? "true" : "false"; }

void add_solver_keys(KeyValues& kv, const SolverOptions& o) {
  kv["max-iter"] = std::to_string(o.max_iter);
  kv["tol"] = num(o.tol);
  kv["delta-w"] = num(o.delta_w);
  kv["seed"] = std::to_string(o.seed);
  kv["trace-every"] = std::to_string(o.trace_every);
}

void write_resolved(const KeyValues& kv, const fs::path& dir,
                    const std::vector<std::string>& notes = {}) {
  std::string text;
  for (const auto& n : notes) text += "# " + n + "\n";
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  write_text(text, dir / "config.resolved");
}

void write_trace(const std::vector<TraceRow>& trace, const fs::path& path) {
  std::string text = "iter,objfun,relerr,elapsed_s\n";
  for (const auto& row : trace) {
    text += std::to_string(row.iter) + ',' + num(row.objfun) + ',' + num(row.relerr) +
            ',' + num(row.elapsed_s) + '\n';
  }
  write_text(text, path);
}

void write_metrics(const MetricReport& m, const fs::path& dir) {
  write_text(m.to_key_values(), dir / "metrics.txt");
  write_text(MetricReport::csv_header() + "\n" + m.to_csv_row() + "\n",
             dir / "metrics.csv");
}

bool same_shapes(const CoupledFactorSet& a, const CoupledFactorSet& b) {
  if (a.num_blocks() != b.num_blocks() || a.order() != b.order()) return false;
  if (a.coupled_counts() != b.coupled_counts()) return false;
  for (std::size_t s = 0; s < a.num_blocks(); ++s) {
    if (a.rank(s) != b.rank(s)) return false;
    for (std::size_t n = 0; n < a.order(); ++n) {
      if (a.individual(s, n).rows() != b.individual(s, n).rows()) return false;
    }
  }
  return true;
}

}  // namespace

void apply_variant(CoupledProblem& problem, const std::string& variant) {
  if (variant == "full" || variant == "full-nc") {
    problem.mode = SolverMode::Full;
  } else if (variant == "lra" || variant == "lra-nc") {
    problem.mode = SolverMode::Lra;
  } else {
    throw std::invalid_argument("unknown variant '" + variant + "'");
  }
  problem.update_core = variant.find("-nc") == std::string::npos;
}

int effective_threads(int requested) {
  int n = std::max(requested, 1);
  if (const char* env = std::getenv("RUN_THREADS"); env && *env) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

MetricReport evaluate(const CoupledProblem& problem, const CoupledFactorSet& factors,
                      const CoupledFactorSet* truth) {
  if (factors.num_blocks() != problem.num_blocks()) {
    throw std::invalid_argument("model has " + std::to_string(factors.num_blocks()) +
                                " blocks, problem has " +
                                std::to_string(problem.num_blocks()));
  }
  std::vector<DenseTensor> recovered;
  for (std::size_t s = 0; s < factors.num_blocks(); ++s) {
    recovered.push_back(reconstruct(factors.block(s)));
  }
  MetricReport m;
  m.relerr = rel_err(problem.tensors, recovered);
  m.tenfit = ten_fit(problem.tensors, recovered);
  m.objfun = objective(problem, factors);
  if (truth && same_shapes(factors, *truth)) {
    bool rank_ok = true;
    for (std::size_t s = 0; s < truth->num_blocks(); ++s) rank_ok &= truth->rank(s) >= 2;
    if (rank_ok) m.pi_per_mode = performance_index_per_mode(factors, *truth);
  }
  return m;
}

void cmd_generate(const GenerateConfig& cfg) {
  const SynthProblem g = generate(cfg.spec);
  const fs::path truth = write_coupled_set(g.truth, cfg.out, "truth");
  write_problem(g.problem, cfg.out, truth);

  KeyValues kv{{"n", std::to_string(cfg.spec.size_factor)},
               {"blocks", std::to_string(cfg.spec.blocks)},
               {"snr-db", num(cfg.spec.snr_db)},
               {"seed", std::to_string(cfg.spec.seed)},
               {"out", cfg.out.string()}};
  if (cfg.spec.dims) kv["dims"] = join(*cfg.spec.dims, ',');
  if (cfg.spec.rank) kv["rank"] = std::to_string(*cfg.spec.rank);
  if (cfg.spec.coupled) kv["coupled"] = join(*cfg.spec.coupled, ',');
  write_resolved(kv, cfg.out,
                 {"dims " + join(cfg.spec.resolved_dims(), 'x') + ", rank " +
                  std::to_string(cfg.spec.resolved_rank()) + ", coupled " +
                  join(cfg.spec.resolved_coupled(), ',')});
}

SolveOutcome cmd_solve(const SolveConfig& cfg) {
  ProblemFiles files;
  CoupledProblem problem = read_problem(cfg.problem, &files);
  problem.mode = cfg.mode;
  problem.update_core = cfg.update_core;
  problem.compression = cfg.compression;

  SolveOutcome out;
  out.result = solve(problem, cfg.solver);
  std::optional<CoupledFactorSet> truth;
  if (files.truth) truth = read_coupled_set(*files.truth);
  out.metrics = evaluate(problem, out.result.factors, truth ? &*truth : nullptr);
  out.metrics.elapsed_s = out.result.elapsed_s;

  write_coupled_set(out.result.factors, cfg.out, "model");
  write_trace(out.result.trace, cfg.out / "trace.csv");
  write_metrics(out.metrics, cfg.out);

  KeyValues kv{{"problem", cfg.problem.string()},
               {"out", cfg.out.string()},
               {"mode", mode_name(cfg.mode)},
               {"no-core", boolean(!cfg.update_core)},
               {"als-rank", std::to_string(cfg.compression.rank)},
               {"als-tol", num(cfg.compression.tol)},
               {"als-max-iter", std::to_string(cfg.compression.max_iter)}};
  add_solver_keys(kv, cfg.solver);
  write_resolved(kv, cfg.out,
                 {std::string("termination ") + to_string(out.result.reason) +
                  " after " + std::to_string(out.result.iterations) + " iterations"});
  return out;
}

BenchOutcome cmd_bench(const BenchConfig& cfg) {
  if (cfg.sizes.empty() || cfg.variants.empty() || cfg.repeats < 1) {
    throw std::invalid_argument("bench needs sizes, variants and repeats >= 1");
  }
  for (const auto& v : cfg.variants) {
    CoupledProblem probe;
    apply_variant(probe, v);
  }
  cfg.solver.validate();

  struct Task {
    std::size_t n;
    std::string variant;
    int repeat;
  };
  std::vector<Task> tasks;
  for (std::size_t n : cfg.sizes) {
    for (const auto& v : cfg.variants) {
      for (int r = 0; r < cfg.repeats; ++r) tasks.push_back({n, v, r});
    }
  }

  BenchOutcome outcome;
  outcome.rows.resize(tasks.size());
  outcome.workers = std::min<int>(effective_threads(cfg.threads),
                                  static_cast<int>(tasks.size()));

  // Problems are shared by all variants of one (n, repeat).
  std::map<std::pair<std::size_t, int>, std::shared_ptr<const SynthProblem>> cache;
  std::mutex cache_mu;
  auto problem_for = [&](std::size_t n, int repeat) {
    std::lock_guard lock(cache_mu);
    auto& slot = cache[{n, repeat}];
    if (!slot) {
      SynthSpec spec;
      spec.blocks = cfg.blocks;
      spec.size_factor = n;
      spec.snr_db = cfg.snr_db;
      spec.seed = cfg.seed + static_cast<std::uint64_t>(repeat);
      slot = std::make_shared<const SynthProblem>(generate(spec));
    }
    return slot;
  };

  auto run_task = [&](std::size_t i) {
    const Task& t = tasks[i];
    BenchRow& row = outcome.rows[i];
    row.n = t.n;
    row.variant = t.variant;
    row.repeat = t.repeat;
    try {
      const auto g = problem_for(t.n, t.repeat);
      CoupledProblem problem = g->problem;
      apply_variant(problem, t.variant);
      SolverOptions opts = cfg.solver;
      opts.seed = cfg.seed + static_cast<std::uint64_t>(t.repeat);
      const SolveResult r = solve(problem, opts);
      const MetricReport m = evaluate(problem, r.factors, &g->truth);
      row.pi = m.pi_mean();
      row.tenfit = m.tenfit;
      row.time_s = r.elapsed_s;
      row.objfun = r.objfun;
      write_trace(r.trace, cfg.out / "runs" /
                               ("n" + std::to_string(t.n) + "_" + t.variant + "_r" +
                                std::to_string(t.repeat)) /
                               "trace.csv");
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.pi = row.tenfit = row.time_s = row.objfun = kNaN;
    }
  };

  if (outcome.workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < outcome.workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) run_task(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::string csv = "n,variant,repeat,pi,tenfit,time_s,objfun\n";
  for (const auto& r : outcome.rows) {
    csv += std::to_string(r.n) + ',' + r.variant + ',' + std::to_string(r.repeat) + ',' +
           num(r.pi) + ',' + num(r.tenfit) + ',' + num(r.time_s) + ',' + num(r.objfun) +
           '\n';
    if (!r.ok) ++outcome.failures;
  }
  write_text(csv, cfg.out / "bench.csv");

  std::string summary = "n,variant,runs,failures,pi,tenfit,time_s,objfun,concurrent\n";
  for (std::size_t n : cfg.sizes) {
    for (const auto& v : cfg.variants) {
      double pi = 0, fit = 0, time = 0, obj = 0;
      int ok = 0, failed = 0;
      for (const auto& r : outcome.rows) {
        if (r.n != n || r.variant != v) continue;
        if (!r.ok) {
          ++failed;
          continue;
        }
        ++ok;
        pi += r.pi;
        fit += r.tenfit;
        time += r.time_s;
        obj += r.objfun;
      }
      const double d = ok > 0 ? ok : kNaN;
      summary += std::to_string(n) + ',' + v + ',' + std::to_string(ok) + ',' +
                 std::to_string(failed) + ',' + num(pi / d) + ',' + num(fit / d) + ',' +
                 num(time / d) + ',' + num(obj / d) + ',' +
                 boolean(outcome.workers > 1) + '\n';
    }
  }
  write_text(summary, cfg.out / "bench_summary.csv");

  std::string errors;
  for (const auto& r : outcome.rows) {
    if (!r.ok) {
      errors += "n=" + std::to_string(r.n) + " " + r.variant + " repeat " +
                std::to_string(r.repeat) + ": " + r.error + "\n";
    }
  }
  if (!errors.empty()) write_text(errors, cfg.out / "bench_errors.txt");

  KeyValues kv{{"sizes", join(cfg.sizes, ',')},
               {"repeats", std::to_string(cfg.repeats)},
               {"variants", join(cfg.variants, ',')},
               {"blocks", std::to_string(cfg.blocks)},
               {"snr-db", num(cfg.snr_db)},
               {"threads", std::to_string(cfg.threads)},
               {"out", cfg.out.string()}};
  add_solver_keys(kv, cfg.solver);
  kv["seed"] = std::to_string(cfg.seed);
  write_resolved(kv, cfg.out,
                 {"workers " + std::to_string(outcome.workers) + ", timing " +
                  (outcome.workers > 1 ? "concurrent" : "single-threaded")});
  return outcome;
}

MetricReport cmd_eval(const EvalConfig& cfg) {
  ProblemFiles files;
  const CoupledProblem problem = read_problem(cfg.problem, &files);
  const CoupledFactorSet model = read_coupled_set(cfg.model);
  const std::optional<fs::path> truth_path = cfg.truth ? cfg.truth : files.truth;
  std::optional<CoupledFactorSet> truth;
  if (truth_path) truth = read_coupled_set(*truth_path);
  const MetricReport m = evaluate(problem, model, truth ? &*truth : nullptr);

  write_metrics(m, cfg.out);
  KeyValues kv{{"problem", cfg.problem.string()},
               {"model", cfg.model.string()},
               {"out", cfg.out.string()}};
  if (cfg.truth) kv["truth"] = cfg.truth->string();
  write_resolved(kv, cfg.out);
  return m;
}

}  // namespace concpd::cli
