#pragma once

#include <chrono>
#include <cstdint>

#include "dhpl/clock.hpp"
#include "dhpl/engine.hpp"
#include "dhpl/fabric.hpp"
#include "dhpl/grid.hpp"
#include "dhpl/panel.hpp"

namespace dhpl {

/// Linear per-phase cost coefficients for Model mode, in seconds per flop
/// (gemm, trsm, fact) or per byte (xfer, bcast, swap). `latency_s` is added
/// to every modeled message.
struct CostModel {
  double c_gemm = 0.0;
  double c_trsm = 0.0;
  double c_fact = 0.0;
  double c_xfer = 0.0;
  double c_bcast = 0.0;
  double c_swap = 0.0;
  double latency_s = 0.0;

  void validate() const;
  EngineCoefficients engine() const { return {c_gemm, c_trsm, c_swap, c_xfer}; }
  DelayModel row_delay() const { return {latency_s, c_bcast, true}; }
  DelayModel column_delay() const { return {latency_s, c_swap, true}; }
};

struct RunConfig {
  index_t n = 0;
  int nb = 512;
  int P = 1;
  int Q = 1;
  /// Fraction of each rank's local columns kept in the right section.
  double split_fraction = 0.5;
  std::uint64_t seed = 1;
  FactConfig fact;
  BcastAlgo bcast = BcastAlgo::OneRing;
  TimeMode mode = TimeMode::Real;
  bool lookahead = true;
  bool split = true;
  DelayModel net;  // Real mode message delay
  CostModel cost;  // Model mode coefficients
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};

  /// Throws std::invalid_argument with an actionable message.
  void validate() const;

  ProcessGrid grid() const { return {P, Q}; }
  BlockCyclicMap map() const { return {n, nb, grid()}; }
  index_t num_iterations() const { return (n + nb - 1) / nb; }

  /// Left-section width n1 for process column q: the split fraction applied
  /// to its local column count, rounded to a multiple of NB.
  index_t left_columns(int q) const;
};

/// Single-node configuration from the published runs: N = 256000,
/// NB = 512, 4 x 2 grid, 50/50 split.
RunConfig single_node_preset();

}  // namespace dhpl
