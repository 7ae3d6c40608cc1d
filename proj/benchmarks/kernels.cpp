#include "concpd/random.hpp"
#include "concpd/solver.hpp"
#include "concpd/synthgen.hpp"

#include <benchmark/benchmark.h>

namespace concpd {
namespace {

std::vector<Matrix> random_factors(std::size_t n, Index rank) {
  Rng rng(7);
  std::vector<Matrix> out;
  for (std::size_t d : {8 * n, 9 * n, 10 * n}) out.push_back(rng.uniform_matrix(static_cast<Index>(d), rank));
  return out;
}

void BM_KhatriRao(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto us = random_factors(n, static_cast<Index>(n * 9 / 2));
  for (auto _ : state) benchmark::DoNotOptimize(khatri_rao_descending(us, 0));
}
BENCHMARK(BM_KhatriRao)->Arg(2)->Arg(4)->Arg(8);

void BM_HadamardGram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto us = random_factors(n, static_cast<Index>(n * 9 / 2));
  for (auto _ : state) benchmark::DoNotOptimize(hadamard_gram(us, 1));
}
BENCHMARK(BM_HadamardGram)->Arg(2)->Arg(4)->Arg(8);

void BM_Mttkrp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const bool compressed = state.range(1) != 0;
  SynthSpec spec;
  spec.blocks = 1;
  spec.size_factor = n;
  const SynthProblem g = generate(spec);
  const auto us = g.truth.factors(0);
  const BlockData data = compressed ? BlockData::compressed(g.truth.block(0))
                                    : BlockData::full(g.problem.tensors[0]);
  for (auto _ : state) benchmark::DoNotOptimize(data.mttkrp(us, 1));
}
BENCHMARK(BM_Mttkrp)->ArgsProduct({{2, 4, 8}, {0, 1}})->ArgNames({"n", "lra"});

void BM_SolverIteration(benchmark::State& state) {
  SynthSpec spec;
  spec.blocks = 2;
  spec.size_factor = static_cast<std::size_t>(state.range(0));
  CoupledProblem p = generate(spec).problem;
  p.mode = state.range(1) != 0 ? SolverMode::Lra : SolverMode::Full;
  CoupledSolver solver(p, SolverOptions{});
  for (auto _ : state) benchmark::DoNotOptimize(solver.step());
}
BENCHMARK(BM_SolverIteration)
    ->ArgsProduct({{2, 4}, {0, 1}})
    ->ArgNames({"n", "lra"})
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace concpd

BENCHMARK_MAIN();
