#include <functional>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "dhpl/fabric.hpp"

using namespace dhpl;

namespace {

using namespace std::chrono_literals;

// Runs fn(rank) on one thread per rank and rethrows the first failure.
void spawn(World& world, const std::function<void(int)>& fn) {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(world.size());
  for (int r = 0; r < world.size(); ++r) {
    threads.emplace_back([&, r] {
      try {
        fn(r);
      } catch (...) {
        errors[r] = std::current_exception();
        world.shutdown();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

PivotCandidate cand(double v, index_t row) {
  PivotCandidate c;
  c.value = v;
  c.global_row = row;
  c.payload = {v, static_cast<double>(row), -1.0};
  return c;
}

}  // namespace

TEST(Fabric, PingPongPreservesPayload) {
  World world(ProcessGrid(2, 1), {}, 10s);
  const std::vector<double> msg{1.5};
  spawn(world, [&](int r) {
    Clock clock;
    Comm comm = make_world_comm(world, r, clock);
    if (r == 0) {
      comm.send(1, 7, to_payload(msg));
      EXPECT_EQ(doubles_from(comm.recv(1, 8)), msg);
    } else {
      const Payload p = comm.recv(0, 7);
      EXPECT_EQ(p.size(), 8u);
      comm.send(0, 8, p);
    }
  });
}

TEST(Fabric, SameTagIsFifo) {
  World world(ProcessGrid(2, 1), {}, 10s);
  spawn(world, [&](int r) {
    Clock clock;
    Comm comm = make_world_comm(world, r, clock);
    if (r == 0) {
      for (int i = 0; i < 50; ++i) comm.send(1, 3, to_payload(std::vector<double>{double(i)}));
    } else {
      for (int i = 0; i < 50; ++i) EXPECT_EQ(doubles_from(comm.recv(0, 3))[0], i);
    }
  });
}

TEST(Fabric, DelayArithmetic) {
  const DelayModel d{1e-6, 1e-9, true};
  EXPECT_NEAR(d.delay(1'000'000), 1.001e-3, 1e-15);
  EXPECT_EQ(DelayModel{}.delay(1'000'000), 0.0);
}

TEST(Fabric, ModelModeReceiverWaitsForDelivery) {
  World world(ProcessGrid(2, 1), {}, 10s);
  const DelayModel d{1e-6, 1e-9, true};
  double arrived = 0.0;
  spawn(world, [&](int r) {
    Clock clock(TimeMode::Model);
    Comm col = make_column_comm(world, r, clock, d);
    if (r == 0) {
      col.send(1, 1, Payload(1'000'000));
    } else {
      col.recv(0, 1);
      arrived = clock.now();
    }
  });
  EXPECT_GE(arrived, 1.001e-3 - 1e-12);
}

TEST(Fabric, ShutdownWakesBlockedReceiver) {
  World world(ProcessGrid(2, 1), {}, 10s);
  std::thread t([&] {
    std::this_thread::sleep_for(20ms);
    world.shutdown();
  });
  double ready = 0.0;
  EXPECT_THROW(world.take(1, 0, 5, &ready), FabricError);
  t.join();
}

TEST(Fabric, TimeoutIsReported) {
  World world(ProcessGrid(2, 1), {}, 50ms);
  double ready = 0.0;
  EXPECT_THROW(world.take(1, 0, 5, &ready), FabricTimeout);
}

TEST(ColumnMaxloc, SingleRankIsIdentity) {
  World world(ProcessGrid(1, 1), {}, 10s);
  Clock clock;
  Comm col = make_column_comm(world, 0, clock, {});
  const PivotCandidate w = column_maxloc(col, cand(2.0, 4), 0);
  EXPECT_EQ(w.global_row, 4);
  EXPECT_EQ(w.payload, cand(2.0, 4).payload);
}

TEST(ColumnMaxloc, TieRuleAcrossFourRanks) {
  World world(ProcessGrid(4, 1), {}, 10s);
  const double vals[] = {1, 9, 3, 9};
  const index_t rows[] = {10, 7, 2, 3};
  std::vector<PivotCandidate> got(4);
  spawn(world, [&](int r) {
    Clock clock;
    Comm col = make_column_comm(world, r, clock, {});
    got[r] = column_maxloc(col, cand(vals[r], rows[r]), 11);
  });
  for (const auto& w : got) {
    EXPECT_EQ(w.value, 9.0);
    EXPECT_EQ(w.global_row, 3);
    EXPECT_EQ(w.payload, cand(9.0, 3).payload);
  }
}

TEST(ColumnMaxloc, MatchesSequentialScan) {
  std::mt19937 rng(5);
  for (int P = 1; P <= 8; ++P) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<PivotCandidate> in;
      for (int r = 0; r < P; ++r) {
        // Few distinct values so ties are common.
        in.push_back(cand(std::uniform_int_distribution<int>(0, 3)(rng), std::uniform_int_distribution<int>(0, 99)(rng)));
      }
      PivotCandidate best = in[0];
      for (const auto& c : in) {
        if (beats(c, best)) best = c;
      }
      World world(ProcessGrid(P, 1), {}, 10s);
      std::vector<PivotCandidate> got(P);
      spawn(world, [&](int r) {
        Clock clock;
        Comm col = make_column_comm(world, r, clock, {});
        got[r] = column_maxloc(col, in[r], 0);
      });
      for (const auto& w : got) {
        ASSERT_EQ(w.global_row, best.global_row) << "P=" << P;
        ASSERT_EQ(w.value, best.value);
      }
    }
  }
}

TEST(RowBcast, SingleColumnIsNoop) {
  World world(ProcessGrid(1, 1), {}, 10s);
  Clock clock;
  Comm row = make_row_comm(world, 0, clock, {});
  Payload p = to_payload(std::vector<double>{1, 2});
  EXPECT_TRUE(row_bcast(row, 0, p, BcastAlgo::OneRing, 0).empty());
  EXPECT_EQ(doubles_from(p), (std::vector<double>{1, 2}));
}

TEST(RowBcast, OneRingHopOrder) {
  World world(ProcessGrid(1, 4), {}, 10s);
  std::vector<std::vector<Hop>> hops(4);
  std::vector<std::vector<double>> got(4);
  const std::vector<double> panel{3, 1, 4, 1, 5};
  spawn(world, [&](int r) {
    Clock clock;
    Comm row = make_row_comm(world, r, clock, {});
    Payload p = r == 2 ? to_payload(panel) : Payload{};
    hops[r] = row_bcast(row, 2, p, BcastAlgo::OneRing, 4);
    got[r] = doubles_from(p);
  });
  EXPECT_EQ(hops[2], (std::vector<Hop>{{2, 3}}));
  EXPECT_EQ(hops[3], (std::vector<Hop>{{3, 0}}));
  EXPECT_EQ(hops[0], (std::vector<Hop>{{0, 1}}));
  EXPECT_TRUE(hops[1].empty());
  for (const auto& g : got) EXPECT_EQ(g, panel);
}

TEST(RowBcast, TreeDeliversEverywhere) {
  for (int Q : {2, 3, 5, 8}) {
    World world(ProcessGrid(1, Q), {}, 10s);
    std::vector<std::vector<double>> got(Q);
    std::size_t total_hops = 0;
    std::mutex mu;
    spawn(world, [&](int r) {
      Clock clock;
      Comm row = make_row_comm(world, r, clock, {});
      Payload p = r == 1 ? to_payload(std::vector<double>{9, 8}) : Payload{};
      const auto h = row_bcast(row, 1, p, BcastAlgo::BinaryTree, 0);
      got[r] = doubles_from(p);
      std::lock_guard lock(mu);
      total_hops += h.size();
    });
    EXPECT_EQ(total_hops, static_cast<std::size_t>(Q - 1));
    for (const auto& g : got) EXPECT_EQ(g, (std::vector<double>{9, 8}));
  }
}

TEST(RowBcast, EmptyPayloadAndRingHopCount) {
  World world(ProcessGrid(1, 5), {}, 10s);
  std::size_t total = 0;
  std::mutex mu;
  spawn(world, [&](int r) {
    Clock clock;
    Comm row = make_row_comm(world, r, clock, {});
    Payload p;
    const auto h = row_bcast(row, 0, p, BcastAlgo::OneRing, 0);
    EXPECT_TRUE(p.empty());
    std::lock_guard lock(mu);
    total += h.size();
  });
  EXPECT_EQ(total, 4u);
}

TEST(RowBcast, InvalidRootThrows) {
  World world(ProcessGrid(1, 1), {}, 10s);
  Clock clock;
  Comm row = make_row_comm(world, 0, clock, {});
  Payload p;
  EXPECT_THROW(row_bcast(row, 3, p, BcastAlgo::OneRing, 0), std::invalid_argument);
}

namespace {

// Applies ipiv serially to rows of `a` (global rows x cols), then runs the
// distributed exchange on P process rows and compares.
void check_rowswap(index_t n, index_t nb, int P, index_t first_row, const std::vector<index_t>& ipiv,
                   std::uint64_t* messages = nullptr) {
  const index_t cols = 5;
  auto value = [](index_t row, index_t c) { return static_cast<double>(row * 100 + c); };
  std::vector<std::vector<double>> expect(n, std::vector<double>(cols));
  for (index_t i = 0; i < n; ++i) {
    for (index_t c = 0; c < cols; ++c) expect[i][c] = value(i, c);
  }
  for (std::size_t k = 0; k < ipiv.size(); ++k) std::swap(expect[first_row + k], expect[ipiv[k]]);

  const BlockCyclicMap map(n, nb, ProcessGrid(P, 1));
  const SwapPlan plan = make_swap_plan(first_row, ipiv, n);
  World world(ProcessGrid(P, 1), {}, 10s);
  std::vector<std::vector<std::vector<double>>> local(P);
  spawn(world, [&](int p) {
    const index_t mloc = map.local_rows(p);
    auto& mine = local[p];
    mine.assign(mloc, std::vector<double>(cols));
    for (index_t i = 0; i < mloc; ++i) {
      for (index_t c = 0; c < cols; ++c) mine[i][c] = value(map.to_global(p, i, Axis::Row), c);
    }
    const std::vector<index_t> rows = swap_gather_list(plan, map, p);
    LocalMatrix gathered(static_cast<index_t>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      EXPECT_EQ(map.owner(rows[r], Axis::Row), p);
      const index_t li = map.to_local(rows[r], Axis::Row).local;
      for (index_t c = 0; c < cols; ++c) gathered(static_cast<index_t>(r), c) = mine[li][c];
    }
    Clock clock;
    Comm col = make_column_comm(world, p, clock, {});
    const SwapResult res = column_rowswap(col, map, plan, gathered, 0);
    if (p == map.owner(first_row, Axis::Row)) {
      const index_t top = map.to_local(first_row, Axis::Row).local;
      ASSERT_EQ(res.u.rows(), static_cast<index_t>(ipiv.size()));
      for (index_t k = 0; k < res.u.rows(); ++k) {
        for (index_t c = 0; c < cols; ++c) mine[top + k][c] = res.u(k, c);
      }
    }
    for (std::size_t r = 0; r < res.dst_local.size(); ++r) {
      for (index_t c = 0; c < cols; ++c) mine[res.dst_local[r]][c] = res.rows(static_cast<index_t>(r), c);
    }
  });
  if (messages) *messages = world.messages_sent();
  for (int p = 0; p < P; ++p) {
    for (index_t i = 0; i < map.local_rows(p); ++i) {
      ASSERT_EQ(local[p][i], expect[map.to_global(p, i, Axis::Row)]) << "P=" << P << " row " << i;
    }
  }
}

}  // namespace

TEST(ColumnRowswap, IdentitySendsNothing) {
  std::uint64_t messages = 99;
  check_rowswap(8, 2, 2, 0, {0, 1}, &messages);
  EXPECT_EQ(messages, 0u);
}

TEST(ColumnRowswap, OneCrossRankSwapIsTwoMessages) {
  std::uint64_t messages = 0;
  check_rowswap(8, 2, 2, 0, {0, 3}, &messages);
  EXPECT_EQ(messages, 2u);
}

TEST(ColumnRowswap, RandomPivotsMatchSerialSwap) {
  std::mt19937 rng(17);
  for (int P : {2, 4}) {
    for (int trial = 0; trial < 20; ++trial) {
      const index_t n = 61;
      const index_t nb = 4;
      const index_t first = nb * std::uniform_int_distribution<index_t>(0, 13)(rng);
      const index_t width = std::min<index_t>(nb, n - first);
      std::vector<index_t> ipiv;
      for (index_t k = 0; k < width; ++k) ipiv.push_back(std::uniform_int_distribution<index_t>(first + k, n - 1)(rng));
      check_rowswap(n, nb, P, first, ipiv);
    }
  }
}

TEST(ColumnRowswap, PivotOutsideMatrixThrows) {
  const std::vector<index_t> ipiv{0, 9};
  EXPECT_THROW(make_swap_plan(0, ipiv, 8), std::out_of_range);
}

TEST(Fabric, CollectivesDeterministicUnderRepetition) {
  std::vector<index_t> first;
  for (int rep = 0; rep < 100; ++rep) {
    World world(ProcessGrid(4, 1), {}, 10s);
    std::vector<index_t> got(4);
    spawn(world, [&](int r) {
      Clock clock;
      Comm col = make_column_comm(world, r, clock, {});
      got[r] = column_maxloc(col, cand(r % 2 ? 5.0 : 1.0, 40 - r), 0).global_row;
    });
    if (rep == 0) first = got;
    ASSERT_EQ(got, first);
  }
  EXPECT_EQ(first[0], 37);
}
