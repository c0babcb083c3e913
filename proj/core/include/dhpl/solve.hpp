#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhpl/fabric.hpp"
#include "dhpl/grid.hpp"
#include "dhpl/matrix.hpp"

namespace dhpl {

struct SingularMatrixError : std::runtime_error {
  SingularMatrixError(index_t col, const std::string& what) : std::runtime_error(what), column(col) {}
  index_t column;
};

/// Distributed upper-triangular solve U x = y on the factored local piece
/// `ab` of [U | y] held by process (p, q). Block rows are solved from last to
/// first; x is replicated on every rank on return. Every rank of `world`
/// must call this collectively. Throws SingularMatrixError on a zero
/// diagonal.
std::vector<double> back_substitute(Comm& world, const BlockCyclicMap& map, int p, int q,
                                    const LocalMatrix& ab, std::int64_t tag = 0);

/// Distribute a global N x (N+1) [U | y] over `grid`, solve with one worker
/// per rank and return x (identical on all ranks).
std::vector<double> back_substitute(const LocalMatrix& uy, index_t nb, ProcessGrid grid);

/// ||A x - b||_inf / (eps * (||A||_inf ||x||_inf + ||b||_inf) * N) for the
/// N x (N+1) system [A | b].
double scaled_residual(const LocalMatrix& ab, std::span<const double> x);
/// Same, regenerating [A | b] from the seed.
double scaled_residual(std::uint64_t seed, index_t n, std::span<const double> x);

}  // namespace dhpl
