#include <numeric>

#include <benchmark/benchmark.h>

#include "dhpl/engine.hpp"
#include "dhpl/generate.hpp"

namespace {

using namespace dhpl;

LocalMatrix filled(index_t m, index_t n, std::uint64_t seed) {
  LocalMatrix a(m, n);
  for (index_t j = 0; j < n; ++j) {
    for (index_t i = 0; i < m; ++i) a(i, j) = entry_value(seed, i, j, m);
  }
  return a;
}

// C(m x n) -= L(m x nb) * U(nb x n)
void BM_GemmUpdate(benchmark::State& state) {
  const index_t m = state.range(0);
  const index_t n = state.range(1);
  const index_t nb = state.range(2);
  const LocalMatrix l = filled(m, nb, 1);
  const LocalMatrix u = filled(nb, n, 2);
  LocalMatrix c = filled(m, n, 3);
  const EngineCommand cmd = EngineCommand::gemm(l.view(), u.view(), c.view());
  for (auto _ : state) {
    execute_command(cmd);
    benchmark::ClobberMemory();
  }
  state.counters["gflops"] =
      benchmark::Counter(cmd.flops() * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_GemmUpdate)->Args({512, 512, 64})->Args({1024, 1024, 64})->Args({2048, 512, 128});

void BM_GatherRows(benchmark::State& state) {
  const index_t m = state.range(0);
  const index_t n = state.range(1);
  const LocalMatrix a = filled(m, n, 4);
  std::vector<index_t> rows(64);
  std::iota(rows.begin(), rows.end(), 0);
  for (auto& r : rows) r = (r * 37) % m;
  LocalMatrix packed(static_cast<index_t>(rows.size()), n);
  const EngineCommand cmd = EngineCommand::gather(a.view(), rows, packed.view());
  for (auto _ : state) {
    execute_command(cmd);
    benchmark::ClobberMemory();
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * cmd.bytes()));
}
BENCHMARK(BM_GatherRows)->Args({4096, 1024})->Args({8192, 4096});

void BM_TrsmUpdate(benchmark::State& state) {
  const index_t nb = state.range(0);
  const index_t n = state.range(1);
  LocalMatrix l = filled(nb, nb, 5);
  for (index_t i = 0; i < nb; ++i) l(i, i) = 1.0;
  const LocalMatrix u0 = filled(nb, n, 6);
  LocalMatrix u = u0;
  const EngineCommand cmd = EngineCommand::trsm(l.view(), u.view());
  for (auto _ : state) {
    execute_command(cmd);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_TrsmUpdate)->Args({64, 1024})->Args({128, 4096});

}  // namespace

BENCHMARK_MAIN();
