#include "dhpl/pivot.hpp"

#include <stdexcept>

namespace dhpl {

PivotCandidate reduce_pivot(std::span<const PivotCandidate> candidates) {
  if (candidates.empty()) throw std::invalid_argument("reduce_pivot: no candidates");
  const PivotCandidate* best = &candidates.front();
  for (const auto& c : candidates.subspan(1)) {
    if (beats(c, *best)) best = &c;
  }
  return *best;
}

}  // namespace dhpl
