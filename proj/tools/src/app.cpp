#include "concpd/cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <ostream>

namespace concpd::cli {
namespace {

// CLI11 reads numbers with strtod semantics but "inf" is easier to get right
// through the same parser the file formats use.
double parse_snr(const std::string& s) {
  const double v = parse_double(s);
  if (std::isnan(v)) throw CLI::ValidationError("--snr-db", "NaN is not an SNR");
  return v;
}

// Entries of a `key = value` file become `--key=value` arguments placed
// before the user's own, so flags given on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.size() < 2 || args[1].rfind("-", 0) == 0) return args;
  fs::path config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty()) return args;
  std::vector<std::string> injected;
  for (const auto& [k, v] : read_key_values(config, '=')) injected.push_back("--" + k + "=" + v);
  // After the subcommand name, which must come first.
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void add_solver_options(CLI::App* sub, SolverOptions& o) {
  sub->add_option("--max-iter", o.max_iter, "Maximum iterations")->capture_default_str();
  sub->add_option("--tol", o.tol, "Stop when the relative error changes less than this")
      ->capture_default_str();
  sub->add_option("--delta-w", o.delta_w, "Extrapolation weight bound, in (0, 1)")
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "Initialization seed")->capture_default_str();
  sub->add_option("--trace-every", o.trace_every, "Iterations between trace rows")
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupled nonnegative CP decomposition"};
  app.name("concpd");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "key = value file; command-line flags override it");

  GenerateConfig gen;
  std::string gen_snr = "20";
  std::vector<std::size_t> gen_dims, gen_coupled;
  Index gen_rank = 0;
  auto* g = app.add_subcommand("generate", "Write a synthetic coupled problem and its truth");
  g->add_option("--n", gen.spec.size_factor, "Size factor n, dims (8n, 9n, 10n)")
      ->capture_default_str();
  g->add_option("--blocks", gen.spec.blocks, "Number of tensors")->capture_default_str();
  g->add_option("--snr-db", gen_snr, "Gaussian noise SNR in dB, inf for none")
      ->capture_default_str();
  g->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
  g->add_option("--dims", gen_dims, "Override dims")->delimiter(',');
  g->add_option("--rank", gen_rank, "Override rank");
  g->add_option("--coupled", gen_coupled, "Override coupled counts")->delimiter(',');
  g->add_option("--out", gen.out, "Output directory")->required();

  SolveConfig sol;
  std::string sol_mode = "full";
  auto* s = app.add_subcommand("solve", "Run the coupled solver on a problem manifest");
  s->add_option("--problem", sol.problem, "Problem manifest")->required()->check(CLI::ExistingFile);
  s->add_option("--out", sol.out, "Output directory")->required();
  s->add_option("--mode", sol_mode, "full or lra")
      ->check(CLI::IsMember({"full", "lra"}))
      ->capture_default_str();
  bool no_core = false;
  s->add_flag("--no-core", no_core, "Freeze core weights at one");
  add_solver_options(s, sol.solver);
  s->add_option("--als-rank", sol.compression.rank, "Compression rank, 0 = model rank")
      ->capture_default_str();
  s->add_option("--als-tol", sol.compression.tol, "Compression tolerance")->capture_default_str();
  s->add_option("--als-max-iter", sol.compression.max_iter, "Compression sweeps")
      ->capture_default_str();

  BenchConfig bench;
  std::string bench_snr = "20";
  auto* b = app.add_subcommand("bench", "Run all variants over a size ladder");
  b->add_option("--sizes", bench.sizes, "Size factors")->delimiter(',')->capture_default_str();
  b->add_option("--repeats", bench.repeats, "Repeats per cell")->capture_default_str();
  b->add_option("--variants", bench.variants, "full, lra, full-nc, lra-nc")
      ->delimiter(',')
      ->check(CLI::IsMember({"full", "lra", "full-nc", "lra-nc"}))
      ->capture_default_str();
  b->add_option("--blocks", bench.blocks, "Tensors per problem")->capture_default_str();
  b->add_option("--snr-db", bench_snr, "Gaussian noise SNR in dB, inf for none")
      ->capture_default_str();
  b->add_option("--threads", bench.threads, "Concurrent runs (capped by RUN_THREADS)")
      ->capture_default_str();
  add_solver_options(b, bench.solver);
  b->add_option("--out", bench.out, "Output directory")->required();

  EvalConfig ev;
  std::string ev_truth;
  auto* e = app.add_subcommand("eval", "Score stored factors against a problem");
  e->add_option("--problem", ev.problem, "Problem manifest")->required()->check(CLI::ExistingFile);
  e->add_option("--model", ev.model, "Model manifest")->required()->check(CLI::ExistingFile);
  e->add_option("--truth", ev_truth, "Truth manifest (default: from the problem)")
      ->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "Output directory")->required();

  for (auto* sub : {g, s, b, e}) {
    for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
  // Lists keep every element of their last occurrence only.
  for (auto* opt : {g->get_option("--dims"), g->get_option("--coupled"),
                    b->get_option("--sizes"), b->get_option("--variants")}) {
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  }

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    // --help and --version exit 0; every other parse failure is a usage error.
    return app.exit(pe, out, err) == 0 ? 0 : 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 2;
  }

  try {
    if (g->parsed()) {
      gen.spec.snr_db = parse_snr(gen_snr);
      if (!gen_dims.empty()) gen.spec.dims = gen_dims;
      if (gen_rank > 0) gen.spec.rank = gen_rank;
      if (!gen_coupled.empty()) gen.spec.coupled = gen_coupled;
      cmd_generate(gen);
      out << "wrote " << gen.spec.blocks << " tensors to " << gen.out.string() << '\n';
    } else if (s->parsed()) {
      sol.mode = sol_mode == "lra" ? SolverMode::Lra : SolverMode::Full;
      sol.update_core = !no_core;
      const SolveOutcome o = cmd_solve(sol);
      out << to_string(o.result.reason) << " after " << o.result.iterations
          << " iterations\n"
          << o.metrics.to_key_values();
    } else if (b->parsed()) {
      bench.snr_db = parse_snr(bench_snr);
      const BenchOutcome o = cmd_bench(bench);
      out << o.rows.size() << " rows, " << o.failures << " failed, " << o.workers
          << " worker(s)\n";
      if (o.failures > 0) {
        err << "see " << (bench.out / "bench_errors.txt").string() << '\n';
        return 1;
      }
    } else if (e->parsed()) {
      if (!ev_truth.empty()) ev.truth = ev_truth;
      out << cmd_eval(ev).to_key_values();
    }
  } catch (const CLI::Error& ce) {
    err << "error: " << ce.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace concpd::cli
