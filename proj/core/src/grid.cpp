#include "dhpl/grid.hpp"

#include <stdexcept>
#include <string>

namespace dhpl {

ProcessGrid::ProcessGrid(int p, int q) : P(p), Q(q) {
  if (p < 1 || q < 1) throw std::invalid_argument("process grid dimensions must be >= 1");
}

index_t local_extent(index_t n, index_t nb, int nprocs, int coord) {
  if (n <= 0) return 0;
  const index_t nblocks = n / nb;
  const index_t rem = n % nb;
  index_t count = (nblocks / nprocs) * nb;
  const index_t extra = nblocks % nprocs;
  if (coord < extra) {
    count += nb;
  } else if (coord == extra) {
    count += rem;
  }
  return count;
}

BlockCyclicMap::BlockCyclicMap(index_t n, index_t nb, ProcessGrid grid)
    : n_(n), nb_(nb), grid_(grid) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  if (nb < 1) throw std::invalid_argument("NB must be >= 1");
}

LocalIndex BlockCyclicMap::to_local(index_t g, Axis axis) const {
  const index_t limit = axis == Axis::Row ? n_ : n_ + 1;
  if (g < 0 || g >= limit) {
    throw std::out_of_range("global index " + std::to_string(g) + " outside [0, " +
                            std::to_string(limit) + ")");
  }
  const int nprocs = grid_.extent(axis);
  const index_t block = g / nb_;
  return {static_cast<int>(block % nprocs), (block / nprocs) * nb_ + g % nb_};
}

index_t BlockCyclicMap::to_global(int coord, index_t local, Axis axis) const {
  const int nprocs = grid_.extent(axis);
  const index_t lblock = local / nb_;
  return (lblock * nprocs + coord) * nb_ + local % nb_;
}

}  // namespace dhpl
