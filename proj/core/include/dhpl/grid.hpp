#pragma once

#include <cstdint>
#include <utility>

namespace dhpl {

using index_t = std::int64_t;

enum class Axis { Row, Column };

/// P x Q arrangement of ranks. Ranks are enumerated column-major:
/// rank = p + q * P.
struct ProcessGrid {
  int P = 1;
  int Q = 1;

  ProcessGrid() = default;
  ProcessGrid(int p, int q);

  int size() const { return P * Q; }
  int rank_of(int p, int q) const { return p + q * P; }
  int row_of(int rank) const { return rank % P; }
  int col_of(int rank) const { return rank / P; }
  int extent(Axis axis) const { return axis == Axis::Row ? P : Q; }

  friend bool operator==(const ProcessGrid&, const ProcessGrid&) = default;
};

/// Number of indices in [0, n) owned by `coord` when blocks of `nb`
/// consecutive indices are dealt round-robin over `nprocs` owners.
/// Called with a prefix length it also gives the local index of the first
/// owned global index >= n.
index_t local_extent(index_t n, index_t nb, int nprocs, int coord);

struct LocalIndex {
  int coord = 0;
  index_t local = 0;
  friend bool operator==(const LocalIndex&, const LocalIndex&) = default;
};

/// Global <-> local index arithmetic for an N x N matrix (plus the
/// right-hand side column N) distributed 2D block-cyclically.
class BlockCyclicMap {
 public:
  BlockCyclicMap(index_t n, index_t nb, ProcessGrid grid);

  index_t n() const { return n_; }
  index_t nb() const { return nb_; }
  const ProcessGrid& grid() const { return grid_; }
  index_t num_blocks() const { return (n_ + nb_ - 1) / nb_; }

  int owner(index_t g, Axis axis) const {
    return static_cast<int>((g / nb_) % grid_.extent(axis));
  }

  /// Throws std::out_of_range unless 0 <= g < extent (N rows, N+1 columns).
  LocalIndex to_local(index_t g, Axis axis) const;
  index_t to_global(int coord, index_t local, Axis axis) const;

  index_t local_rows(int p) const { return local_extent(n_, nb_, grid_.P, p); }
  /// Local column count including the right-hand side column.
  index_t local_cols(int q) const { return local_extent(n_ + 1, nb_, grid_.Q, q); }

  /// Local index of the first owned global index >= g.
  index_t local_begin(index_t g, Axis axis, int coord) const {
    return local_extent(g, nb_, grid_.extent(axis), coord);
  }

 private:
  index_t n_;
  index_t nb_;
  ProcessGrid grid_;
};

}  // namespace dhpl
