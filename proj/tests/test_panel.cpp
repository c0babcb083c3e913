#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dhpl/generate.hpp"
#include "dhpl/panel.hpp"
#include "oracles.hpp"

using namespace dhpl;

namespace {

oracle::Dense random_panel(index_t m, int nb, std::uint64_t seed) {
  oracle::Dense a(m, nb);
  for (index_t j = 0; j < nb; ++j) {
    for (index_t i = 0; i < m; ++i) a(i, j) = entry_value(seed, i, j, m);
  }
  return a;
}

Panel factor(const oracle::Dense& a, FactConfig cfg, AccessLog* log = nullptr) {
  LocalMatrix src(a.m, a.n);
  std::copy(a.a.begin(), a.a.end(), src.storage().begin());
  Panel p = make_local_panel(src.view(), static_cast<int>(a.n));
  panel_factorize(p, cfg, nullptr, log);
  return p;
}

FactConfig config(FactVariant v, int threads, int nb) {
  FactConfig c;
  c.variant = v;
  c.threads = threads;
  c.base_nb = std::min(16, nb);
  return c;
}

}  // namespace

TEST(AssignTiles, WorkedExamples) {
  EXPECT_EQ(assign_tiles(2048, 512, 4), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(assign_tiles(5 * 512, 512, 2), (std::vector<int>{0, 1, 0, 1, 0}));
  EXPECT_EQ(assign_tiles(100, 512, 8), (std::vector<int>{0}));
}

TEST(AssignTiles, RaggedLastTile) {
  EXPECT_EQ(assign_tiles(1100, 512, 2), (std::vector<int>{0, 1, 0}));
}

TEST(FactConfig, Validation) {
  FactConfig c;
  EXPECT_NO_THROW(c.validate(64));
  c.base_nb = 65;
  EXPECT_THROW(c.validate(64), std::invalid_argument);
  c = FactConfig{};
  c.ndiv = 1;
  EXPECT_THROW(c.validate(64), std::invalid_argument);
  c.variant = FactVariant::Crout;
  EXPECT_NO_THROW(c.validate(64));
  c = FactConfig{};
  c.threads = 0;
  EXPECT_THROW(c.validate(64), std::invalid_argument);
  EXPECT_THROW(fact_variant_from_string("diagonal"), std::invalid_argument);
  EXPECT_EQ(fact_variant_from_string("crout"), FactVariant::Crout);
}

TEST(PanelFactorize, SingleColumnSwap) {
  oracle::Dense a(2, 1);
  a(0, 0) = 0.0;
  a(1, 0) = 3.0;
  const Panel p = factor(a, config(FactVariant::Right, 1, 1));
  EXPECT_EQ(p.ipiv, (std::vector<index_t>{1}));
  EXPECT_EQ(p.at(0, 0), 3.0);
  EXPECT_EQ(p.at(1, 0), 0.0);
}

TEST(PanelFactorize, IdentityIsFixedPoint) {
  oracle::Dense a(4, 4);
  for (int i = 0; i < 4; ++i) a(i, i) = 1.0;
  for (const FactVariant v : {FactVariant::Right, FactVariant::Left, FactVariant::Crout, FactVariant::Recursive}) {
    const Panel p = factor(a, config(v, 2, 4));
    EXPECT_EQ(p.ipiv, (std::vector<index_t>{0, 1, 2, 3}));
    EXPECT_EQ(p.data, a.a);
  }
}

// Every variant and team size matches the unblocked serial factorization.
class PanelOracle : public ::testing::TestWithParam<std::tuple<FactVariant, int>> {};

TEST_P(PanelOracle, MatchesSerialRightLooking) {
  const auto [variant, threads] = GetParam();
  for (const auto [m, nb] : {std::pair<index_t, int>{1024, 64}, {1000, 48}, {96, 32}}) {
    const oracle::Dense a = random_panel(m, nb, 11);
    oracle::Dense ref = a;
    const std::vector<std::int64_t> ipiv = oracle::lu(ref, nb);
    const Panel p = factor(a, config(variant, threads, nb));
    ASSERT_EQ(p.ipiv, ipiv) << to_string(variant) << " T=" << threads << " m=" << m;
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.a.size(); ++i) worst = std::max(worst, std::abs(p.data[i] - ref.a[i]));
    EXPECT_LE(worst, 1e-12) << to_string(variant) << " T=" << threads << " m=" << m;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, PanelOracle,
                         ::testing::Combine(::testing::Values(FactVariant::Right, FactVariant::Left,
                                                              FactVariant::Crout, FactVariant::Recursive),
                                            ::testing::Values(1, 2, 4, 8)));

TEST(PanelFactorize, ReconstructsPermutedPanel) {
  const index_t m = 512;
  const int nb = 32;
  const oracle::Dense a = random_panel(m, nb, 23);
  const Panel p = factor(a, config(FactVariant::Recursive, 4, nb));
  oracle::Dense pa = a;
  for (int k = 0; k < nb; ++k) {
    for (int j = 0; j < nb; ++j) std::swap(pa(k, j), pa(p.ipiv[k], j));
  }
  double err = 0.0;
  double norm = 0.0;
  for (index_t i = 0; i < m; ++i) {
    for (int j = 0; j < nb; ++j) {
      double lu = 0.0;
      for (int k = 0; k <= std::min<index_t>(i, j); ++k) {
        const double l = i == k ? 1.0 : p.at(i, k);
        lu += l * p.at(k, j);
      }
      err += (lu - pa(i, j)) * (lu - pa(i, j));
      norm += pa(i, j) * pa(i, j);
    }
  }
  EXPECT_LE(std::sqrt(err / norm), 64 * std::numeric_limits<double>::epsilon() * nb);
}

TEST(PanelFactorize, MultipliersBounded) {
  const oracle::Dense a = random_panel(700, 40, 5);
  const Panel p = factor(a, config(FactVariant::Left, 3, 40));
  for (int k = 0; k < 40; ++k) {
    for (index_t i = k + 1; i < 700; ++i) ASSERT_LE(std::abs(p.at(i, k)), 1.0);
  }
}

TEST(PanelFactorize, PivotsInvariantUnderVariantAndTeam) {
  const oracle::Dense a = random_panel(640, 64, 99);
  const std::vector<index_t> ref = factor(a, config(FactVariant::Right, 1, 64)).ipiv;
  for (const FactVariant v : {FactVariant::Left, FactVariant::Crout, FactVariant::Recursive}) {
    for (int t : {2, 3, 5}) EXPECT_EQ(factor(a, config(v, t, 64)).ipiv, ref);
  }
}

TEST(PanelFactorize, ThreadsOnlyWriteTheirTiles) {
  const index_t m = 9 * 32 + 7;
  const int nb = 32;
  const int threads = 4;
  const oracle::Dense a = random_panel(m, nb, 3);
  for (const FactVariant v : {FactVariant::Right, FactVariant::Left, FactVariant::Crout, FactVariant::Recursive}) {
    AccessLog log(threads);
    factor(a, config(v, threads, nb), &log);
    const std::vector<int> owner = assign_tiles(m, nb, threads);
    const auto writes = log.entries();
    ASSERT_FALSE(writes.empty());
    for (const auto& w : writes) {
      if (w.pivot) {
        EXPECT_EQ(w.thread, 0) << to_string(v);
      } else {
        ASSERT_GE(w.tile, 0);
        EXPECT_EQ(owner[w.tile], w.thread) << to_string(v) << " tile " << w.tile;
      }
    }
  }
}

TEST(PanelFactorize, ZeroColumnIsSingular) {
  oracle::Dense a = random_panel(64, 8, 4);
  for (index_t i = 0; i < 64; ++i) a(i, 5) = 0.0;
  // Column 5 stays zero only if the earlier updates do not touch it.
  try {
    factor(a, config(FactVariant::Right, 2, 8));
    FAIL() << "expected SingularPanelError";
  } catch (const SingularPanelError& e) {
    EXPECT_EQ(e.column, 5);
  }
}

// Every team member must leave together when one column is singular; a
// straggler used to miss the abort and strand thread 0 at a barrier.
TEST(PanelFactorize, SingularAbortReleasesWholeTeam) {
  oracle::Dense a = random_panel(256, 16, 9);
  for (index_t i = 0; i < 256; ++i) a(i, 0) = 0.0;
  for (const FactVariant v : {FactVariant::Right, FactVariant::Left, FactVariant::Crout, FactVariant::Recursive}) {
    for (int t : {2, 4, 8}) {
      FactConfig cfg = config(v, t, 16);
      cfg.base_nb = 4;
      for (int rep = 0; rep < 25; ++rep) {
        LocalMatrix src(a.m, a.n);
        std::copy(a.a.begin(), a.a.end(), src.storage().begin());
        Panel p = make_local_panel(src.view(), 32);
        EXPECT_THROW(panel_factorize(p, cfg), SingularPanelError) << to_string(v) << " T=" << t;
      }
    }
  }
}

TEST(BenchPanel, ReportsPositiveRate) {
  const PanelBenchResult r = bench_panel(64, 64, config(FactVariant::Recursive, 1, 64), 2);
  EXPECT_GT(r.gflops, 0.0);
  EXPECT_GT(r.median_seconds, 0.0);
  EXPECT_DOUBLE_EQ(panel_flops(10, 4), 10.0 * 16 - 64.0 / 3.0);
}
