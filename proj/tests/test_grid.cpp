#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dhpl/grid.hpp"

using namespace dhpl;

TEST(LocalExtent, WorkedExamples) {
  EXPECT_EQ(local_extent(8, 2, 2, 0), 4);
  EXPECT_EQ(local_extent(8, 2, 2, 1), 4);
  EXPECT_EQ(local_extent(5, 8, 3, 0), 5);
  EXPECT_EQ(local_extent(5, 8, 3, 1), 0);
  EXPECT_EQ(local_extent(5, 8, 3, 2), 0);
}

TEST(LocalExtent, PartitionsEveryCount) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const index_t n = std::uniform_int_distribution<index_t>(1, 500)(rng);
    const index_t nb = std::uniform_int_distribution<index_t>(1, 40)(rng);
    const int np = std::uniform_int_distribution<int>(1, 9)(rng);
    index_t total = 0;
    for (int c = 0; c < np; ++c) total += local_extent(n, nb, np, c);
    ASSERT_EQ(total, n) << n << " " << nb << " " << np;
  }
}

TEST(LocalExtent, MatchesEnumeration) {
  for (index_t n = 1; n < 40; ++n) {
    for (index_t nb = 1; nb < 7; ++nb) {
      for (int np = 1; np < 5; ++np) {
        std::vector<index_t> count(np, 0);
        for (index_t g = 0; g < n; ++g) ++count[(g / nb) % np];
        for (int c = 0; c < np; ++c) ASSERT_EQ(local_extent(n, nb, np, c), count[c]);
      }
    }
  }
}

TEST(BlockCyclicMap, WorkedExamples) {
  const BlockCyclicMap map(8, 2, ProcessGrid(2, 2));
  EXPECT_EQ(map.to_local(0, Axis::Row), (LocalIndex{0, 0}));
  EXPECT_EQ(map.to_local(5, Axis::Row), (LocalIndex{0, 3}));
  EXPECT_EQ(map.to_local(3, Axis::Column), (LocalIndex{1, 1}));
}

TEST(BlockCyclicMap, BijectionOnRowsAndColumns) {
  for (const ProcessGrid g : {ProcessGrid(1, 1), ProcessGrid(2, 3), ProcessGrid(4, 2)}) {
    for (index_t nb : {1, 3, 8}) {
      const BlockCyclicMap map(37, nb, g);
      for (const Axis axis : {Axis::Row, Axis::Column}) {
        const index_t extent = axis == Axis::Row ? 37 : 38;
        std::set<std::pair<int, index_t>> seen;
        for (index_t i = 0; i < extent; ++i) {
          const LocalIndex li = map.to_local(i, axis);
          EXPECT_EQ(li.coord, map.owner(i, axis));
          EXPECT_EQ(map.to_global(li.coord, li.local, axis), i);
          EXPECT_TRUE(seen.insert({li.coord, li.local}).second);
        }
      }
    }
  }
}

TEST(BlockCyclicMap, OutOfRangeThrows) {
  const BlockCyclicMap map(8, 2, ProcessGrid(2, 2));
  EXPECT_THROW(map.to_local(8, Axis::Row), std::out_of_range);
  EXPECT_THROW(map.to_local(-1, Axis::Row), std::out_of_range);
  EXPECT_NO_THROW(map.to_local(8, Axis::Column));  // right-hand side
  EXPECT_THROW(map.to_local(9, Axis::Column), std::out_of_range);
}

TEST(ProcessGrid, RankBijectionColumnMajor) {
  const ProcessGrid g(3, 4);
  std::set<int> ranks;
  for (int q = 0; q < 4; ++q) {
    for (int p = 0; p < 3; ++p) {
      const int r = g.rank_of(p, q);
      EXPECT_EQ(r, p + 3 * q);
      EXPECT_EQ(g.row_of(r), p);
      EXPECT_EQ(g.col_of(r), q);
      ranks.insert(r);
    }
  }
  EXPECT_EQ(ranks.size(), 12u);
  EXPECT_EQ(*ranks.rbegin(), 11);
}

TEST(ProcessGrid, RejectsEmptyGrid) {
  EXPECT_THROW(ProcessGrid(0, 2), std::invalid_argument);
  EXPECT_THROW(ProcessGrid(2, 0), std::invalid_argument);
}
