#include <gtest/gtest.h>

#include "dhpl/generate.hpp"

using namespace dhpl;

namespace {

// Reassembles the global [A | b] from every rank's local piece.
LocalMatrix assemble(std::uint64_t seed, index_t n, index_t nb, ProcessGrid g) {
  const BlockCyclicMap map(n, nb, g);
  LocalMatrix global(n, n + 1);
  for (int q = 0; q < g.Q; ++q) {
    for (int p = 0; p < g.P; ++p) {
      const LocalMatrix local = generate_local(seed, map, p, q);
      EXPECT_EQ(local.rows(), map.local_rows(p));
      EXPECT_EQ(local.cols(), map.local_cols(q));
      for (index_t j = 0; j < local.cols(); ++j) {
        for (index_t i = 0; i < local.rows(); ++i) {
          global(map.to_global(p, i, Axis::Row), map.to_global(q, j, Axis::Column)) = local(i, j);
        }
      }
    }
  }
  return global;
}

}  // namespace

TEST(Generate, PureFunctionOfCoordinates) {
  const double v = entry_value(42, 3, 7, 16);
  EXPECT_EQ(v, entry_value(42, 3, 7, 16));
  EXPECT_NE(v, entry_value(43, 3, 7, 16));
  EXPECT_NE(v, entry_value(42, 7, 3, 16));
}

TEST(Generate, FourByFourSameOnEveryGrid) {
  const LocalMatrix one = assemble(9, 4, 1, ProcessGrid(1, 1));
  const LocalMatrix two = assemble(9, 4, 1, ProcessGrid(2, 2));
  EXPECT_EQ(one.storage(), two.storage());
  EXPECT_EQ(one.storage(), generate_global(9, 4).storage());
}

TEST(Generate, GridShapeInvariant) {
  const LocalMatrix ref = generate_global(5, 45);
  for (const ProcessGrid g : {ProcessGrid(2, 3), ProcessGrid(4, 2), ProcessGrid(1, 5)}) {
    for (index_t nb : {1, 4, 16, 64}) {
      EXPECT_EQ(assemble(5, 45, nb, g).storage(), ref.storage()) << g.P << "x" << g.Q << " nb=" << nb;
    }
  }
}

TEST(Generate, RangeAndMean) {
  const LocalMatrix a = generate_global(1, 64);
  double sum = 0.0;
  int count = 0;
  for (index_t j = 0; j < 64; ++j) {
    for (index_t i = 0; i < 64; ++i) {
      ASSERT_GE(a(i, j), -0.5);
      ASSERT_LE(a(i, j), 0.5);
      sum += a(i, j);
      ++count;
    }
  }
  const double mean = sum / count;
  EXPECT_GT(mean, -0.05);
  EXPECT_LT(mean, 0.05);
}

TEST(Generate, RegenerationIsBitwiseStable) {
  const BlockCyclicMap map(100, 8, ProcessGrid(2, 2));
  EXPECT_EQ(generate_local(77, map, 1, 1).storage(), generate_local(77, map, 1, 1).storage());
}
