#pragma once

#include <limits>
#include <vector>

#include "dhpl/config.hpp"
#include "dhpl/timeline.hpp"

namespace dhpl {

inline constexpr double kResidualThreshold = 16.0;

struct SolveResult {
  /// False in Model mode, where no arithmetic is performed.
  bool has_solution = false;
  std::vector<double> x;
  double residual = std::numeric_limits<double>::quiet_NaN();
  bool passed = false;
  /// Pivot rows of every panel, concatenated (global row indices).
  std::vector<index_t> pivots;
  /// One row per iteration, taken from the rank factoring the next panel.
  std::vector<IterationTrace> traces;
  /// Factorization time in seconds (simulated in Model mode).
  double seconds = 0.0;
  double gflops = 0.0;
};

/// Solve the generated system with one worker per rank of the P x Q grid.
/// Throws std::invalid_argument for a bad config, SingularPanelError on an
/// exactly singular pivot column and FabricTimeout if a rank stalls.
SolveResult run(const RunConfig& cfg);

/// Rank whose timers make up row j of the trace.
int trace_rank(const RunConfig& cfg, index_t j);

}  // namespace dhpl
