#include "dhpl/cost_model.hpp"

#include <algorithm>

#include "dhpl/driver.hpp"
#include "dhpl/timeline.hpp"
#include "schedule.hpp"

namespace dhpl {

namespace {

// Host and engine timelines of one rank; the engine runs commands in order.
struct Timeline {
  double host = 0.0;
  double engine = 0.0;
  double busy = 0.0;

  double enqueue(double cost) {
    engine = std::max(host, engine) + cost;
    busy += cost;
    return engine;
  }
  void wait(double t) { host = std::max(host, t); }
};

}  // namespace

PredictedIteration predict_iteration(const RunConfig& cfg, index_t j) {
  PredictedIteration out;
  out.j = j;
  const BlockCyclicMap map = cfg.map();
  const int rank = trace_rank(cfg, j);
  const int p = cfg.grid().row_of(rank);
  const int q = cfg.grid().col_of(rank);
  const detail::Sections s = detail::sections(cfg, map, p, q, j);
  // The last split iteration leaves the right section exchanged; the
  // fallback that consumes it still overlaps UPDATE2 with FACT.
  const bool tail = !s.split && s.pending && cfg.lookahead;
  if (!s.split && !tail) return out;
  out.split = s.split;
  out.modeled = true;

  const CostModel& c = cfg.cost;
  const double word = sizeof(double);
  const auto jb = static_cast<double>(s.jb);
  const auto jb_next = static_cast<double>(s.next_jb);
  const bool diag_j = p == map.owner(j * cfg.nb, Axis::Row);
  const auto below = static_cast<double>(s.mloc - s.rb);
  const auto m_next = static_cast<double>(s.mloc - s.rb);
  const auto w_la = static_cast<double>(s.la_end - s.t);
  const auto w_left = static_cast<double>(std::max<index_t>(s.split_lc - s.la_end, 0));
  const auto w_right = static_cast<double>(s.ncols - s.split_lc);

  // U spread down the process column: binomial tree, the recording rank is
  // the root's first neighbour (or the root itself for the next panel).
  const int spread_sends = detail::ceil_log2(cfg.P);
  auto spread_inject = [&](double rows, double w) { return spread_sends * rows * w * word * c.c_swap; };
  auto spread_arrival = [&](double rows, double w) {
    return cfg.P > 1 ? spread_inject(rows, w) + c.latency_s : 0.0;
  };
  // The spread root for panel j was the RS2 root last iteration and did not
  // wait out that exchange's latency, so it starts one latency ahead.
  const double head_start = cfg.P > 1 && s.pending ? c.latency_s : 0.0;
  auto gather = [&](double rows, double w) { return rows * w * word * c.c_swap; };
  auto update = [&](double w) {
    double t = c.c_trsm * jb * jb * w + c.c_gemm * 2.0 * below * jb * w;
    if (diag_j) t += c.c_swap * jb * w * word;
    return t;
  };
  const double xfer = c.c_xfer * m_next * jb_next * word;
  const double fact = detail::model_fact_seconds(c, cfg.P, s.mloc - s.rb, s.next_jb);
  const int lbcast_sends = cfg.Q == 1 ? 0 : (cfg.bcast == BcastAlgo::OneRing ? 1 : detail::ceil_log2(cfg.Q));
  const double lbcast = lbcast_sends * (jb_next + jb_next * jb_next + m_next * jb_next) * word * c.c_bcast;

  // Gather rows only exist on the diagonal process row of each panel.
  const double g_la = diag_j ? gather(jb, w_la) : 0.0;
  const double g_left = diag_j ? gather(jb, w_left) : 0.0;
  const double g_right = gather(jb_next, w_right);
  const double x_left = w_left > 0 ? spread_arrival(jb, w_left) : 0.0;
  const double x_right = w_right > 0 ? spread_inject(jb_next, w_right) : 0.0;

  Timeline tl;
  if (tail) {
    // One exchange of [t, split_lc) in place of the look-ahead and left pair.
    const double w_fresh = w_la + w_left;
    const double fresh_gathered = tl.enqueue(diag_j ? gather(jb, w_fresh) : 0.0);
    tl.wait(fresh_gathered);
    if (w_fresh > 0) {
      tl.wait(cfg.P > 1 ? gather(jb, w_fresh) + spread_arrival(jb, w_fresh) - head_start : tl.host);
    }
    if (w_la > 0) tl.enqueue(update(w_la));
    const double copied = s.factor_next && m_next > 0 ? tl.enqueue(xfer) : tl.engine;
    if (w_left > 0) tl.enqueue(update(w_left));
    out.update2 = update(w_right);
    tl.enqueue(out.update2);
    if (s.factor_next) {
      tl.wait(copied);
      tl.host += fact;
      if (m_next > 0) tl.enqueue(xfer);
    }
    if (s.has_next) tl.host += lbcast;
    out.hidden = s.factor_next ? (m_next > 0 ? 2.0 * xfer : 0.0) + fact : 0.0;
    out.hidden += s.has_next ? lbcast : 0.0;
    out.t_engine = tl.busy;
    out.t_iter = std::max(tl.host, tl.engine);
    out.exposed = classify(out.t_iter, out.t_engine) == Regime::Exposed;
    return out;
  }

  const double end_la = tl.enqueue(g_la);
  tl.enqueue(g_left);
  tl.wait(end_la);
  if (w_la > 0) {
    // The spread root gathers its look-ahead rows first.
    const double root_gather = gather(jb, w_la);
    tl.wait(cfg.P > 1 ? root_gather + spread_arrival(jb, w_la) - head_start : tl.host);
    tl.enqueue(update(w_la));
  }
  const double copied = m_next > 0 ? tl.enqueue(xfer) : tl.engine;
  out.update2 = update(w_right);
  tl.enqueue(out.update2);

  tl.wait(copied);
  tl.host += fact;
  if (m_next > 0) tl.enqueue(xfer);
  tl.host += lbcast;
  tl.host += x_left;
  const double gathered = tl.enqueue(g_right);
  if (w_left > 0) tl.enqueue(update(w_left));
  tl.wait(gathered);
  tl.host += x_right;

  out.hidden = (m_next > 0 ? 2.0 * xfer : 0.0) + fact + lbcast + x_left;
  out.t_engine = tl.busy;
  out.t_iter = std::max(tl.host, tl.engine);
  out.exposed = classify(out.t_iter, out.t_engine) == Regime::Exposed;
  return out;
}

index_t predict_crossover(const RunConfig& cfg) {
  const index_t nblocks = cfg.num_iterations();
  for (index_t j = 0; j < nblocks; ++j) {
    const PredictedIteration it = predict_iteration(cfg, j);
    // The timeline only sees this rank; once the hidden phases outgrow
    // UPDATE2 the other ranks fall behind as well.
    if (it.exposed || (it.split && it.hidden > it.update2)) return j;
    if (!it.modeled) return j;
  }
  return nblocks;
}

double tune_split(const RunConfig& cfg) {
  const int q0 = cfg.grid().col_of(trace_rank(cfg, 0));
  const index_t ncols = cfg.map().local_cols(q0);
  RunConfig trial = cfg;
  trial.split = true;
  trial.lookahead = true;
  for (index_t k = 1; k * cfg.nb < ncols; ++k) {
    trial.split_fraction = static_cast<double>(k * cfg.nb) / static_cast<double>(ncols);
    const PredictedIteration it = predict_iteration(trial, 0);
    if (it.split && it.update2 >= it.hidden) return trial.split_fraction;
  }
  return 1.0;
}

namespace {

RunConfig model_shape() {
  RunConfig cfg;
  cfg.nb = 16;
  cfg.n = 500 * 16;
  cfg.P = 2;
  cfg.Q = 2;
  cfg.split_fraction = 0.5;
  cfg.mode = TimeMode::Model;
  cfg.bcast = BcastAlgo::OneRing;
  return cfg;
}

}  // namespace

RunConfig reference_model_config() {
  RunConfig cfg = model_shape();
  cfg.cost.c_gemm = 1e-11;
  cfg.cost.c_trsm = 1e-11;
  cfg.cost.c_fact = 4e-10;
  cfg.cost.c_xfer = 5e-11;
  cfg.cost.c_bcast = 2.5e-11;
  cfg.cost.c_swap = 2e-10;
  cfg.cost.latency_s = 1.5e-5;
  return cfg;
}

RunConfig balanced_model_config() {
  RunConfig cfg = reference_model_config();
  cfg.cost.c_fact *= 2.5;
  cfg.cost.c_xfer *= 2.5;
  cfg.cost.c_bcast *= 2.5;
  cfg.cost.c_swap *= 2.5;
  cfg.cost.latency_s *= 2.5;
  return cfg;
}

}  // namespace dhpl
