#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "dhpl/cost_model.hpp"
#include "dhpl/driver.hpp"
#include "dhpl/generate.hpp"
#include "oracles.hpp"
#include "schedule.hpp"

using namespace dhpl;

namespace {

RunConfig real_config(index_t n, int nb, int P, int Q) {
  RunConfig cfg;
  cfg.n = n;
  cfg.nb = nb;
  cfg.P = P;
  cfg.Q = Q;
  cfg.seed = 3;
  cfg.fact.base_nb = std::min(16, nb);
  return cfg;
}

oracle::Dense system(std::uint64_t seed, index_t n) {
  const LocalMatrix g = generate_global(seed, n);
  oracle::Dense d(n, n + 1);
  std::copy(g.storage().begin(), g.storage().end(), d.a.begin());
  return d;
}

}  // namespace

TEST(Driver, TinySystemMatchesDenseSolve) {
  const RunConfig cfg = real_config(4, 4, 1, 1);
  const SolveResult r = run(cfg);
  ASSERT_TRUE(r.has_solution);
  const std::vector<double> x = oracle::solve(system(cfg.seed, 4));
  EXPECT_LE(oracle::max_diff(r.x, x), 1e-12);
  EXPECT_TRUE(r.passed);
}

TEST(Driver, ClassicScheduleMatchesOracleFactorization) {
  RunConfig cfg = real_config(96, 8, 2, 2);
  cfg.lookahead = false;
  cfg.split = false;
  oracle::Dense ab = system(cfg.seed, 96);
  const oracle::Dense orig = ab;
  const std::vector<std::int64_t> ipiv = oracle::lu(ab, 96);
  const SolveResult r = run(cfg);
  EXPECT_EQ(r.pivots, std::vector<index_t>(ipiv.begin(), ipiv.end()));
  const std::vector<double> x = oracle::solve(orig);
  EXPECT_LE(oracle::max_diff(r.x, x), 1e-8 * oracle::max_abs(x));
}

TEST(Driver, CrossGridConsistency) {
  std::vector<std::vector<double>> xs;
  for (const auto [P, Q] : {std::pair{1, 1}, {2, 2}, {4, 2}}) {
    const SolveResult r = run(real_config(512, 64, P, Q));
    EXPECT_TRUE(r.passed) << P << "x" << Q << " residual " << r.residual;
    EXPECT_LE(r.residual, kResidualThreshold);
    xs.push_back(r.x);
  }
  const double scale = oracle::max_abs(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_LE(oracle::max_diff(xs[0], xs[i]), 1e-8 * scale);
}

TEST(Driver, ScheduleDoesNotChangePivots) {
  for (const auto [P, Q] : {std::pair{2, 2}, {2, 4}, {1, 3}}) {
    RunConfig cfg = real_config(200, 16, P, Q);
    std::vector<index_t> pivots;
    std::vector<double> x;
    for (const bool la : {false, true}) {
      for (const bool sp : {false, true}) {
        cfg.lookahead = la;
        cfg.split = sp;
        const SolveResult r = run(cfg);
        EXPECT_TRUE(r.passed);
        if (pivots.empty()) {
          pivots = r.pivots;
          x = r.x;
          continue;
        }
        EXPECT_EQ(r.pivots, pivots) << P << "x" << Q << " la=" << la << " split=" << sp;
        EXPECT_LE(oracle::max_diff(r.x, x), 1e-8 * oracle::max_abs(x));
      }
    }
  }
}

TEST(Driver, ExtremeSplitFractions) {
  for (const double f : {0.0, 0.1, 0.9, 1.0}) {
    RunConfig cfg = real_config(160, 8, 2, 2);
    cfg.split_fraction = f;
    EXPECT_TRUE(run(cfg).passed) << f;
  }
}

TEST(Driver, RaggedLastBlockAndTreeBroadcast) {
  RunConfig cfg = real_config(101, 8, 2, 3);
  cfg.bcast = BcastAlgo::BinaryTree;
  cfg.fact.variant = FactVariant::Crout;
  cfg.fact.threads = 3;
  const SolveResult r = run(cfg);
  EXPECT_TRUE(r.passed) << r.residual;
  EXPECT_EQ(r.pivots.size(), 101u);
  EXPECT_EQ(r.traces.size(), 13u);
}

TEST(Driver, DeterministicRealMode) {
  const RunConfig cfg = real_config(256, 32, 2, 2);
  const SolveResult a = run(cfg);
  const SolveResult b = run(cfg);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(std::memcmp(&a.residual, &b.residual, sizeof(double)), 0);
  EXPECT_EQ(a.pivots, b.pivots);
}

TEST(Driver, DeterministicModelMode) {
  RunConfig cfg = reference_model_config();
  cfg.n = 1600;
  const SolveResult a = run(cfg);
  const SolveResult b = run(cfg);
  EXPECT_FALSE(a.has_solution);
  EXPECT_TRUE(std::isnan(a.residual));
  EXPECT_EQ(a.traces, b.traces);
  EXPECT_EQ(a.pivots, b.pivots);
}

TEST(Driver, ModelTracesAreConsistent) {
  const RunConfig cfg = reference_model_config();
  const SolveResult r = run(cfg);
  ASSERT_EQ(static_cast<index_t>(r.traces.size()), cfg.num_iterations());
  for (const auto& t : r.traces) {
    EXPECT_LE(t.t_engine, t.t_iter * (1 + 1e-12)) << t.j;
    EXPECT_EQ(t.regime, classify(t.t_iter, t.t_engine));
    EXPECT_GT(t.t_iter, 0.0) << t.j;
  }
  EXPECT_GT(r.seconds, 0.0);
}

TEST(Driver, HiddenPhasesPersistWhileLeftSectionLasts) {
  const RunConfig cfg = reference_model_config();
  const PredictedIteration it0 = predict_iteration(cfg, 0);
  ASSERT_GE(it0.update2, it0.hidden);
  const SolveResult r = run(cfg);
  const BlockCyclicMap map = cfg.map();
  for (const auto& t : r.traces) {
    const int rank = trace_rank(cfg, t.j);
    const auto s = detail::sections(cfg, map, cfg.grid().row_of(rank), cfg.grid().col_of(rank), t.j);
    if (s.split) EXPECT_EQ(t.regime, Regime::Hidden) << t.j;
  }
}

TEST(Sections, RightSectionFixedWhileLeftShrinks) {
  RunConfig cfg = reference_model_config();
  const BlockCyclicMap map = cfg.map();
  for (int q = 0; q < cfg.Q; ++q) {
    index_t prev_left = -1;
    index_t right = -1;
    for (index_t j = 0; j < cfg.num_iterations(); ++j) {
      const auto s = detail::sections(cfg, map, 0, q, j);
      if (!s.split) break;
      EXPECT_EQ(s.split_lc % cfg.nb, 0);
      if (right < 0) right = s.ncols - s.split_lc;
      EXPECT_EQ(s.ncols - s.split_lc, right);
      const index_t left = s.split_lc - s.t;
      if (prev_left >= 0) EXPECT_TRUE(left == prev_left || left == prev_left - cfg.nb);
      prev_left = left;
    }
  }
}

TEST(Driver, ConfigErrors) {
  RunConfig cfg = real_config(64, 8, 2, 2);
  cfg.nb = 0;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = real_config(64, 8, 2, 2);
  cfg.nb = 128;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = real_config(64, 8, 2, 2);
  cfg.split_fraction = 1.5;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = real_config(64, 8, 2, 2);
  cfg.fact.base_nb = 9;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg = real_config(200000, 512, 2, 2);
  EXPECT_THROW(run(cfg), std::invalid_argument);  // too large for Real mode
}

TEST(Driver, SingleNodePresetIsAccepted) {
  RunConfig cfg = single_node_preset();
  EXPECT_EQ(cfg.n, 256000);
  EXPECT_EQ(cfg.nb, 512);
  EXPECT_EQ(cfg.P, 4);
  EXPECT_EQ(cfg.Q, 2);
  cfg.mode = TimeMode::Model;
  EXPECT_NO_THROW(cfg.validate());
}
