#pragma once

#include <string>
#include <vector>

namespace dhpl {

/// CPU core time-sharing assignment for a node-local P x Q grid on C cores.
///
/// Rank r = p + q*P is bound to root core r. The remaining pool of
/// C - P*Q cores is cut into P disjoint slices of floor(pool / P) cores, one
/// per process row; every rank of that row runs T = 1 + floor(pool / P)
/// threads over its root core plus the row's slice. Only one process column
/// factors at a time, so the P factoring ranks never share a core. Remainder
/// cores (pool mod P) stay idle.
struct CorePlan {
  struct Binding {
    int rank = 0;
    int p = 0;
    int q = 0;
    int root_core = 0;
    std::vector<int> pool_cores;
  };

  int cores = 0;
  int P = 1;
  int Q = 1;
  int pool = 0;         // C - P*Q
  int slice = 0;        // floor(pool / P)
  int threads = 1;      // T
  int idle_remainder = 0;
  std::vector<Binding> bindings;  // indexed by rank

  /// Cores busy while one process column factors: P * T.
  int fact_cores() const { return P * threads; }

  /// Naive alternative: every rank owns C / (P*Q) cores exclusively.
  int naive_cores_per_rank() const { return cores / (P * Q); }
  int naive_fact_cores() const { return P * naive_cores_per_rank(); }
  /// Idle cores in the naive layout while one column factors and the other
  /// ranks each keep a single core busy.
  int naive_idle_cores() const { return cores - naive_fact_cores() - (P * Q - P); }
};

/// Throws std::invalid_argument unless C >= P*Q >= 1.
CorePlan plan_bindings(int cores, int P, int Q);

/// Human-readable table, one row per rank.
std::string format_plan_table(const CorePlan& plan);
/// One `export` line per rank: OMP_NUM_THREADS and OMP_PLACES for its cores.
std::string format_plan_exports(const CorePlan& plan);

/// Optional platform hook: pin the calling thread to `core`. Returns false
/// when pinning is unsupported or fails.
bool pin_current_thread(int core);

}  // namespace dhpl
