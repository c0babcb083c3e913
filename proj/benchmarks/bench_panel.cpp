#include <benchmark/benchmark.h>

#include "dhpl/generate.hpp"
#include "dhpl/panel.hpp"

namespace {

using namespace dhpl;

// args: M, NB, variant, T
void BM_PanelFactorize(benchmark::State& state) {
  const index_t m = state.range(0);
  const int nb = static_cast<int>(state.range(1));
  FactConfig cfg;
  cfg.variant = static_cast<FactVariant>(state.range(2));
  cfg.threads = static_cast<int>(state.range(3));
  cfg.base_nb = std::min(16, nb);
  LocalMatrix a(m, nb);
  for (index_t j = 0; j < nb; ++j) {
    for (index_t i = 0; i < m; ++i) a(i, j) = entry_value(7, i, j, m);
  }
  for (auto _ : state) {
    state.PauseTiming();
    Panel panel = make_local_panel(a.view(), 64);
    state.ResumeTiming();
    panel_factorize(panel, cfg);
    benchmark::DoNotOptimize(panel.data.data());
  }
  state.counters["gflops"] =
      benchmark::Counter(panel_flops(m, nb) * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void variants(benchmark::internal::Benchmark* b) {
  for (int v = 0; v < 4; ++v) b->Args({2048, 64, v, 1});
  for (int t : {1, 2, 4}) b->Args({4096, 128, static_cast<int>(FactVariant::Recursive), t});
}

BENCHMARK(BM_PanelFactorize)->Apply(variants)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
