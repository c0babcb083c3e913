#pragma once

#include <limits>
#include <span>
#include <vector>

#include "dhpl/grid.hpp"

namespace dhpl {

/// Row nominated as pivot for one column: |value|, its global row, and the
/// row's current panel entries so the winner can be swapped in without a
/// second round trip.
struct PivotCandidate {
  static constexpr index_t kNoRow = std::numeric_limits<index_t>::max();

  double value = 0.0;
  index_t global_row = kNoRow;
  std::vector<double> payload;

  bool empty() const { return global_row == kNoRow; }
};

/// Strict ordering used by every reduction: larger value wins, ties go to
/// the smaller global row.
inline bool beats(const PivotCandidate& a, const PivotCandidate& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.global_row < b.global_row;
}

/// Winner among `candidates` (must be non-empty).
PivotCandidate reduce_pivot(std::span<const PivotCandidate> candidates);

}  // namespace dhpl
