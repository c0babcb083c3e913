#include "dhpl/driver.hpp"

#include <algorithm>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "dhpl/generate.hpp"
#include "dhpl/solve.hpp"
#include "schedule.hpp"

namespace dhpl {

namespace {

using detail::Sections;

// Tag layout: one window per panel, one slot per operation. Row swaps use
// [slot, slot + 2*NB) and the U spread that follows them slot + 4096.
enum class Op : std::int64_t { TopShare, Pivot, Lbcast, RsLookahead, RsLeft, RsRight, RsAll };
constexpr std::int64_t kSlot = 1 << 13;
constexpr std::int64_t kSpreadOffset = 4096;

std::int64_t tag_for(index_t panel, Op op, std::int64_t sub = 0) {
  return panel * 16 * kSlot + static_cast<std::int64_t>(op) * kSlot + sub;
}

// Factored panel as seen by every rank of one process row.
struct PanelL {
  index_t k = -1;
  int jb = 0;
  index_t r0 = 0;
  std::vector<index_t> ipiv;
  LocalMatrix top;  // jb x jb: unit lower L11 and U11
  LocalMatrix l;    // local rows >= k*NB, jb columns
};

// Row-swap result for local columns [c0, c1), U already spread down the
// process column.
struct Exchange {
  index_t c0 = 0;
  index_t c1 = 0;
  LocalMatrix u;
  std::vector<index_t> dst_local;
  LocalMatrix rows;
};

class ColumnPivotExchange final : public PivotExchange {
 public:
  ColumnPivotExchange(Comm& column, index_t panel, int diag) : col_(column), panel_(panel), diag_(diag) {}

  PivotCandidate reduce(const PivotCandidate& local, int column) override {
    return column_maxloc(col_, local, tag_for(panel_, Op::Pivot, 2 * column));
  }

  void share_top(std::vector<double>& top) override {
    if (col_.size() == 1) return;
    Payload p;
    if (col_.rank() == diag_) p = to_payload(top);
    bcast(col_, diag_, p, BcastAlgo::BinaryTree, tag_for(panel_, Op::TopShare));
    if (col_.rank() != diag_) top = doubles_from(p);
  }

 private:
  Comm& col_;
  index_t panel_;
  int diag_;
};

class RankWorker {
 public:
  RankWorker(const RunConfig& cfg, World& world, int rank)
      : cfg_(cfg),
        map_(cfg.map()),
        world_(world),
        rank_(rank),
        p_(cfg.grid().row_of(rank)),
        q_(cfg.grid().col_of(rank)),
        clock_(cfg.mode),
        col_(make_column_comm(world, rank, clock_, column_delay())),
        row_(make_row_comm(world, rank, clock_, row_delay())),
        engine_(cfg.mode, cfg.mode == TimeMode::Model ? cfg.cost.engine() : EngineCoefficients{}, clock_),
        real_(cfg.mode == TimeMode::Real),
        mloc_(map_.local_rows(p_)),
        ncols_(map_.local_cols(q_)) {}

  void run() {
    a_ = real_ ? generate_local(cfg_.seed, map_, p_, q_) : LocalMatrix::shape_only(mloc_, ncols_);
    const index_t nblocks = map_.num_blocks();
    const double t_start = clock_.now();
    prologue();
    traces.reserve(static_cast<std::size_t>(nblocks));
    for (index_t j = 0; j < nblocks; ++j) iterate(j);
    seconds = clock_.now() - t_start;
    engine_.shutdown();
    if (real_) {
      Comm world = make_world_comm(world_, rank_, clock_);
      x = back_substitute(world, map_, p_, q_, a_);
    }
  }

  std::vector<IterationTrace> traces;
  std::vector<index_t> pivots;
  std::vector<double> x;
  double seconds = 0.0;

 private:
  DelayModel column_delay() const { return cfg_.mode == TimeMode::Model ? cfg_.cost.column_delay() : cfg_.net; }
  DelayModel row_delay() const { return cfg_.mode == TimeMode::Model ? cfg_.cost.row_delay() : cfg_.net; }

  LocalMatrix buffer(index_t m, index_t n) const {
    return real_ ? LocalMatrix(m, n) : LocalMatrix::shape_only(m, n);
  }

  MatrixView columns(index_t c0, index_t c1) { return a_.view().block(0, c0, mloc_, c1 - c0); }

  void wait(const EngineEvent& ev) {
    if (ev.valid()) engine_.wait(ev);
  }

  // --- row swaps --------------------------------------------------------

  EngineEvent gather(const SwapPlan& plan, index_t c0, index_t c1, LocalMatrix& out) {
    std::vector<index_t> rows;
    for (index_t g : swap_gather_list(plan, map_, p_)) rows.push_back(map_.to_local(g, Axis::Row).local);
    out = buffer(static_cast<index_t>(rows.size()), std::max<index_t>(c1 - c0, 0));
    if (rows.empty() || c1 <= c0) return {};
    return engine_.enqueue(EngineCommand::gather(columns(c0, c1), std::move(rows), out.view()));
  }

  Exchange exchange(const SwapPlan& plan, int jb, index_t c0, index_t c1, const LocalMatrix& gathered,
                    std::int64_t tag) {
    Exchange e;
    e.c0 = c0;
    e.c1 = std::max(c0, c1);
    if (e.c1 == e.c0) return e;
    const double t0 = clock_.now();
    SwapResult r = column_rowswap(col_, map_, plan, gathered, tag);
    const int diag = map_.owner(plan.first_row, Axis::Row);
    e.u = p_ == diag ? std::move(r.u) : LocalMatrix(jb, e.c1 - e.c0);
    bcast_matrix(col_, diag, e.u, BcastAlgo::BinaryTree, tag + kSpreadOffset);
    e.dst_local = std::move(r.dst_local);
    e.rows = std::move(r.rows);
    t_comm_ += clock_.now() - t0;
    return e;
  }

  void scatter_down(const Exchange& e, index_t c0, index_t c1) {
    if (c1 <= c0 || e.dst_local.empty()) return;
    engine_.enqueue(EngineCommand::scatter(e.rows.view().block(0, c0 - e.c0, e.rows.rows(), c1 - c0),
                                           e.dst_local, columns(c0, c1)));
  }

  // UPDATE of local columns [c0, c1) with the current panel.
  void update(const Sections& s, Exchange& e, index_t c0, index_t c1, bool with_scatter) {
    if (c1 <= c0) return;
    if (with_scatter) scatter_down(e, c0, c1);
    const index_t w = c1 - c0;
    MatrixView u = e.u.view().block(0, c0 - e.c0, cur_.jb, w);
    MatrixView a = columns(c0, c1);
    engine_.enqueue(EngineCommand::trsm(cur_.top.view(), u));
    if (p_ == map_.owner(s.j * cfg_.nb, Axis::Row)) {
      std::vector<index_t> top_rows(static_cast<std::size_t>(cur_.jb));
      for (int i = 0; i < cur_.jb; ++i) top_rows[i] = cur_.r0 + i;
      engine_.enqueue(EngineCommand::scatter(u, std::move(top_rows), a));
    }
    const index_t below = mloc_ - s.rb;
    if (below > 0) {
      engine_.enqueue(EngineCommand::gemm(cur_.l.view().block(s.rb - cur_.r0, 0, below, cur_.jb), u,
                                          a.block(s.rb, 0, below, w)));
    }
  }

  // --- FACT and LBCAST --------------------------------------------------

  // Copies panel k to the host; the caller waits on the event before
  // finish_fact.
  EngineEvent begin_fact(index_t k) {
    next_ = PanelL{};
    next_.k = k;
    next_.jb = static_cast<int>(detail::panel_width(cfg_, k));
    next_.r0 = map_.local_begin(k * cfg_.nb, Axis::Row, p_);
    const index_t m = mloc_ - next_.r0;
    const index_t c0 = map_.local_begin(k * cfg_.nb, Axis::Column, q_);
    next_.l = LocalMatrix(m, next_.jb);
    MatrixView host = next_.l.view();
    if (!real_) host.data = nullptr;
    if (m == 0) return {};
    return engine_.enqueue(EngineCommand::to_host(a_.view().block(next_.r0, c0, m, next_.jb), host));
  }

  void finish_fact(index_t k, const EngineEvent& copied) {
    wait(copied);
    const double t0 = clock_.now();
    const index_t m = next_.l.rows();
    const int jb = next_.jb;
    const int diag = map_.owner(k * cfg_.nb, Axis::Row);
    next_.top = LocalMatrix(jb, jb);
    if (real_) {
      Panel panel;
      panel.rows = m;
      panel.width = jb;
      panel.tile_rows = cfg_.nb;
      panel.data = next_.l.storage();
      panel.global_row.resize(static_cast<std::size_t>(m));
      for (index_t i = 0; i < m; ++i) panel.global_row[i] = map_.to_global(p_, next_.r0 + i, Axis::Row);
      panel.diag_row = k * cfg_.nb;
      panel.owns_diag = p_ == diag;
      ColumnPivotExchange ex(col_, k, diag);
      panel_factorize(panel, cfg_.fact, &ex);
      next_.l.storage() = std::move(panel.data);
      next_.top.storage() = std::move(panel.top);
      next_.ipiv = std::move(panel.ipiv);
    } else {
      clock_.charge(detail::model_fact_seconds(cfg_.cost, cfg_.P, m, jb));
      next_.ipiv = identity_pivots(k);
    }
    t_fact_ += clock_.now() - t0;
    if (m > 0) {
      const index_t c0 = map_.local_begin(k * cfg_.nb, Axis::Column, q_);
      MatrixView dst = a_.view().block(next_.r0, c0, m, jb);
      ConstMatrixView src = next_.l.view();
      if (!real_) src.data = nullptr;
      engine_.enqueue(EngineCommand::to_engine(src, dst));
    }
  }

  std::vector<index_t> identity_pivots(index_t k) const {
    std::vector<index_t> ipiv(static_cast<std::size_t>(detail::panel_width(cfg_, k)));
    for (std::size_t i = 0; i < ipiv.size(); ++i) ipiv[i] = k * cfg_.nb + static_cast<index_t>(i);
    return ipiv;
  }

  // Panel k along the process row: ipiv, the diagonal block, then L rows.
  void lbcast(index_t k) {
    const double t0 = clock_.now();
    const int root = map_.owner(k * cfg_.nb, Axis::Column);
    const bool is_root = q_ == root;
    const int jb = static_cast<int>(detail::panel_width(cfg_, k));
    const index_t r0 = map_.local_begin(k * cfg_.nb, Axis::Row, p_);
    const index_t m = mloc_ - r0;
    Payload payload;
    if (is_root) {
      std::vector<double> packed(static_cast<std::size_t>(jb + jb * jb + m * jb), 0.0);
      if (real_) {
        for (int i = 0; i < jb; ++i) packed[i] = static_cast<double>(next_.ipiv[i]);
        std::copy(next_.top.storage().begin(), next_.top.storage().end(), packed.begin() + jb);
        std::copy_n(next_.l.storage().begin(), m * jb, packed.begin() + jb + jb * jb);
      }
      payload = to_payload(packed);
    }
    bcast(row_, root, payload, cfg_.bcast, tag_for(k, Op::Lbcast));
    if (!is_root) {
      next_ = PanelL{};
      next_.k = k;
      next_.jb = jb;
      next_.r0 = r0;
      next_.top = LocalMatrix(jb, jb);
      next_.l = LocalMatrix(m, jb);
      if (real_) {
        const std::vector<double> packed = doubles_from(payload);
        next_.ipiv.resize(static_cast<std::size_t>(jb));
        for (int i = 0; i < jb; ++i) next_.ipiv[i] = static_cast<index_t>(packed[i]);
        std::copy(packed.begin() + jb, packed.begin() + jb + jb * jb, next_.top.storage().begin());
        std::copy_n(packed.begin() + jb + jb * jb, m * jb, next_.l.storage().begin());
      } else {
        next_.ipiv = identity_pivots(k);
      }
    }
    pivots.insert(pivots.end(), next_.ipiv.begin(), next_.ipiv.end());
    t_comm_ += clock_.now() - t0;
  }

  void factor_and_broadcast(index_t k, bool mine) {
    if (mine) finish_fact(k, begin_fact(k));
    lbcast(k);
  }

  // --- schedules --------------------------------------------------------

  void prologue() {
    factor_and_broadcast(0, q_ == 0);
    cur_ = std::move(next_);
    const Sections s = detail::sections(cfg_, map_, p_, q_, 0);
    if (s.pending) {
      const SwapPlan plan = make_swap_plan(0, cur_.ipiv, cfg_.n);
      LocalMatrix g;
      wait(gather(plan, s.split_lc, s.ncols, g));
      pending_ = exchange(plan, cur_.jb, s.split_lc, s.ncols, g, tag_for(0, Op::RsRight));
    }
    engine_.wait_all();
  }

  void iterate(index_t j) {
    const Sections s = detail::sections(cfg_, map_, p_, q_, j);
    engine_.wait_all();
    engine_.reset_usage();
    t_comm_ = 0.0;
    t_fact_ = 0.0;
    const double t0 = clock_.now();

    const SwapPlan plan = make_swap_plan(j * cfg_.nb, cur_.ipiv, cfg_.n);
    if (!cfg_.lookahead) {
      classic(s, plan);
    } else if (s.split) {
      split(s, plan);
    } else {
      fallback(s, plan);
    }
    engine_.wait_all();

    IterationTrace tr;
    tr.j = j;
    tr.t_iter = clock_.now() - t0;
    const auto usage = engine_.usage();
    tr.t_engine = usage.busy;
    tr.t_fact = t_fact_;
    tr.t_comm = t_comm_;
    tr.t_xfer = usage.transfer;
    tr.regime = classify(tr.t_iter, tr.t_engine);
    traces.push_back(tr);

    if (s.has_next) cur_ = std::move(next_);
  }

  void split(const Sections& s, const SwapPlan& plan) {
    // Gather look-ahead and left rows, scatter the right rows from RS2.
    LocalMatrix g_la, g_left;
    const EngineEvent ev_la = gather(plan, s.t, s.la_end, g_la);
    const EngineEvent ev_left = gather(plan, s.la_end, s.split_lc, g_left);
    scatter_down(pending_, s.split_lc, s.ncols);

    wait(ev_la);
    Exchange x_la = exchange(plan, s.jb, s.t, s.la_end, g_la, tag_for(s.j, Op::RsLookahead));
    update(s, x_la, s.t, s.la_end, true);
    EngineEvent copied;
    if (s.factor_next) copied = begin_fact(s.j + 1);
    update(s, pending_, s.split_lc, s.ncols, false);  // UPDATE2

    if (s.factor_next) finish_fact(s.j + 1, copied);
    lbcast(s.j + 1);
    wait(ev_left);
    Exchange x_left = exchange(plan, s.jb, s.la_end, s.split_lc, g_left, tag_for(s.j, Op::RsLeft));

    const SwapPlan next_plan = make_swap_plan((s.j + 1) * cfg_.nb, next_.ipiv, cfg_.n);
    LocalMatrix g_right;
    const EngineEvent ev_right = gather(next_plan, s.split_lc, s.ncols, g_right);
    update(s, x_left, s.la_end, s.split_lc, true);  // UPDATE1

    wait(ev_right);
    Exchange next_pending = exchange(next_plan, s.next_jb, s.split_lc, s.ncols, g_right,
                                     tag_for(s.j + 1, Op::RsRight));
    engine_.wait_all();
    pending_ = std::move(next_pending);
  }

  // Look-ahead without the split: a single exposed exchange for every
  // column not already exchanged.
  void fallback(const Sections& s, const SwapPlan& plan) {
    const index_t fresh_end = s.pending ? s.split_lc : s.ncols;
    LocalMatrix g;
    const EngineEvent ev = gather(plan, s.t, fresh_end, g);
    if (s.pending) scatter_down(pending_, s.split_lc, s.ncols);
    wait(ev);
    Exchange xf = exchange(plan, s.jb, s.t, fresh_end, g, tag_for(s.j, Op::RsAll));

    update(s, xf, s.t, s.la_end, true);
    EngineEvent copied;
    if (s.factor_next) copied = begin_fact(s.j + 1);
    update(s, xf, s.la_end, fresh_end, true);
    if (s.pending) update(s, pending_, s.split_lc, s.ncols, false);

    if (s.factor_next) finish_fact(s.j + 1, copied);
    if (s.has_next) lbcast(s.j + 1);
    engine_.wait_all();
    pending_ = Exchange{};
  }

  // Classic right-looking order: swap and update everything, then factor.
  void classic(const Sections& s, const SwapPlan& plan) {
    LocalMatrix g;
    wait(gather(plan, s.t, s.ncols, g));
    Exchange xf = exchange(plan, s.jb, s.t, s.ncols, g, tag_for(s.j, Op::RsAll));
    update(s, xf, s.t, s.ncols, true);
    engine_.wait_all();
    if (s.has_next) factor_and_broadcast(s.j + 1, s.factor_next);
  }

  const RunConfig& cfg_;
  BlockCyclicMap map_;
  World& world_;
  int rank_;
  int p_;
  int q_;
  Clock clock_;
  Comm col_;
  Comm row_;
  UpdateEngine engine_;
  bool real_;
  index_t mloc_;
  index_t ncols_;
  LocalMatrix a_;
  PanelL cur_;
  PanelL next_;
  Exchange pending_;
  double t_comm_ = 0.0;
  double t_fact_ = 0.0;
};

double hpl_flops(index_t n) {
  const auto d = static_cast<double>(n);
  return 2.0 / 3.0 * d * d * d + 1.5 * d * d;
}

}  // namespace

int trace_rank(const RunConfig& cfg, index_t j) {
  if (j + 1 < cfg.num_iterations()) {
    return cfg.grid().rank_of(static_cast<int>((j + 1) % cfg.P), static_cast<int>((j + 1) % cfg.Q));
  }
  // The last iteration only updates the right-hand side column.
  const BlockCyclicMap map = cfg.map();
  return cfg.grid().rank_of(map.owner(j * cfg.nb, Axis::Row), map.owner(cfg.n, Axis::Column));
}

SolveResult run(const RunConfig& cfg) {
  cfg.validate();
  const ProcessGrid grid = cfg.grid();
  World world(grid, cfg.net, cfg.timeout);

  std::vector<std::unique_ptr<RankWorker>> workers;
  for (int r = 0; r < grid.size(); ++r) workers.push_back(std::make_unique<RankWorker>(cfg, world, r));

  std::mutex err_mu;
  std::exception_ptr first_err;
  bool first_is_fabric = true;
  std::vector<std::thread> threads;
  for (int r = 0; r < grid.size(); ++r) {
    threads.emplace_back([&, r] {
      try {
        workers[r]->run();
      } catch (...) {
        auto err = std::current_exception();
        bool fabric = false;
        try {
          std::rethrow_exception(err);
        } catch (const FabricError&) {
          fabric = true;
        } catch (...) {
        }
        {
          // Prefer the root cause over the errors it triggers on other ranks.
          std::lock_guard lock(err_mu);
          if (!first_err || (first_is_fabric && !fabric)) {
            first_err = err;
            first_is_fabric = fabric;
          }
        }
        world.shutdown();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_err) std::rethrow_exception(first_err);

  SolveResult res;
  const index_t nblocks = cfg.num_iterations();
  res.pivots = workers[0]->pivots;
  res.traces.reserve(static_cast<std::size_t>(nblocks));
  for (index_t j = 0; j < nblocks; ++j) res.traces.push_back(workers[trace_rank(cfg, j)]->traces[j]);
  for (const auto& w : workers) res.seconds = std::max(res.seconds, w->seconds);
  if (res.seconds > 0) res.gflops = hpl_flops(cfg.n) / res.seconds * 1e-9;

  if (cfg.mode == TimeMode::Real) {
    res.has_solution = true;
    res.x = workers[0]->x;
    res.residual = scaled_residual(cfg.seed, cfg.n, res.x);
    res.passed = res.residual <= kResidualThreshold;
  }
  return res;
}

}  // namespace dhpl
