#pragma once

#include <cstdint>

#include "dhpl/grid.hpp"
#include "dhpl/matrix.hpp"

namespace dhpl {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Entry (i, j) of the N x (N+1) system [A | b], uniform in [-0.5, 0.5).
/// Depends only on (seed, i, j, N), so every rank can produce any entry.
double entry_value(std::uint64_t seed, index_t i, index_t j, index_t n);

/// Local piece of [A | b] owned by process (p, q). The right-hand side is
/// global column N and lands in the last local column of its owner.
LocalMatrix generate_local(std::uint64_t seed, const BlockCyclicMap& map, int p, int q);

/// Whole N x (N+1) system on one process.
LocalMatrix generate_global(std::uint64_t seed, index_t n);

}  // namespace dhpl
