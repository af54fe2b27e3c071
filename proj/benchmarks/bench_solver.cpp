#include <benchmark/benchmark.h>

#include "impulse/oracle.hpp"
#include "impulse/solver.hpp"

namespace {

using namespace impulse;

ProblemSpec p1() {
  ProblemParams p;
  p.values = {{"alpha", 0.5}, {"xi_step", 0.04}, {"xi_max", 4.0}};
  return builtin_problem(kNullFlow, p);
}

ProblemSpec p2() {
  ProblemParams p;
  p.values = {{"alpha", 0.3}, {"beta", 0.1}};
  return builtin_problem(kAdversarialDrift, p);
}

SolveOptions forced() {
  SolveOptions o;
  o.force = true;
  return o;
}

void BM_SolveNullFlow(benchmark::State& state) {
  const ProblemSpec spec = p1();
  const GridSpec grid{{-2.0}, {2.0}, {static_cast<std::size_t>(state.range(0))}, 50};
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec, grid, forced()));
}
BENCHMARK(BM_SolveNullFlow)->Arg(51)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);

void BM_SolveAdversarialDrift(benchmark::State& state) {
  const ProblemSpec spec = p2();
  const auto n = static_cast<std::size_t>(state.range(0));
  const GridSpec grid{{-3.0}, {3.0}, {n}, (n - 1) * 5 / 6};
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec, grid, forced()));
}
BENCHMARK(BM_SolveAdversarialDrift)->Arg(61)->Arg(121)->Arg(241)->Unit(benchmark::kMillisecond);

void BM_ApplyN(benchmark::State& state) {
  const ProblemSpec spec = p1();
  const GridSpec grid{{-2.0}, {2.0}, {static_cast<std::size_t>(state.range(0))}, 1};
  const ValueSlice slice = sample_on_grid(grid, 0.0, [](std::span<const double> x) { return std::abs(x[0]); });
  for (auto _ : state) benchmark::DoNotOptimize(apply_N(slice, 0.0, spec, grid));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.node_count() * spec.impulse_candidates.size()));
}
BENCHMARK(BM_ApplyN)->Arg(101)->Arg(401);

void BM_EnumerateCorpus(benchmark::State& state) {
  const auto corpus = generate_corpus(20240601);
  for (auto _ : state)
    for (const auto& game : corpus)
      for (std::size_t s = 0; s < game.n_states; ++s) benchmark::DoNotOptimize(enumerate_value(game, s));
}
BENCHMARK(BM_EnumerateCorpus)->Unit(benchmark::kMillisecond);

void BM_BackwardValue(benchmark::State& state) {
  const auto corpus = generate_corpus(20240601);
  for (auto _ : state)
    for (const auto& game : corpus) benchmark::DoNotOptimize(backward_value(game));
}
BENCHMARK(BM_BackwardValue);

}  // namespace

BENCHMARK_MAIN();
