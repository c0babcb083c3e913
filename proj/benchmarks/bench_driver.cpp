#include <benchmark/benchmark.h>

#include "dhpl/cost_model.hpp"
#include "dhpl/driver.hpp"

namespace {

using namespace dhpl;

// Real-mode solve; args: N, NB, P, Q, split
void BM_Solve(benchmark::State& state) {
  RunConfig cfg;
  cfg.n = state.range(0);
  cfg.nb = static_cast<int>(state.range(1));
  cfg.P = static_cast<int>(state.range(2));
  cfg.Q = static_cast<int>(state.range(3));
  cfg.split = state.range(4) != 0;
  cfg.fact.base_nb = std::min(16, cfg.nb);
  double gflops = 0.0;
  for (auto _ : state) {
    const SolveResult r = run(cfg);
    if (!r.passed) state.SkipWithError("residual check failed");
    gflops = r.gflops;
  }
  state.counters["gflops"] = gflops;
}
BENCHMARK(BM_Solve)
    ->Args({1024, 64, 1, 1, 1})
    ->Args({1024, 64, 2, 2, 0})
    ->Args({1024, 64, 2, 2, 1})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

// Cost of simulating the 500-iteration reference scenario.
void BM_ModelReference(benchmark::State& state) {
  const RunConfig cfg = reference_model_config();
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg).traces.size());
}
BENCHMARK(BM_ModelReference)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PredictCrossover(benchmark::State& state) {
  const RunConfig cfg = reference_model_config();
  for (auto _ : state) benchmark::DoNotOptimize(predict_crossover(cfg));
}
BENCHMARK(BM_PredictCrossover);

}  // namespace

BENCHMARK_MAIN();
