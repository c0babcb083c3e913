#pragma once

// Per-iteration column sections shared by the driver and the cost model.

#include <algorithm>

#include "dhpl/config.hpp"

namespace dhpl::detail {

struct Sections {
  index_t j = 0;
  int jb = 0;            // width of panel j
  bool has_next = false;
  int next_jb = 0;
  bool factor_next = false;  // this process column owns panel j+1

  index_t mloc = 0;
  index_t r0 = 0;  // first local row >= j*NB
  index_t rb = 0;  // first local row below panel j's diagonal block

  index_t ncols = 0;
  index_t t = 0;       // first trailing local column
  index_t la_end = 0;  // look-ahead columns are [t, la_end)
  index_t split_lc = 0;

  bool split = false;    // split schedule this iteration
  bool pending = false;  // [split_lc, ncols) was exchanged for panel j last iteration
};

inline int ceil_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

/// Modeled FACT time: flops plus one column-wide max-loc reduction and
/// broadcast per pivot column, each a tree of depth ceil(log2 P).
inline double model_fact_seconds(const CostModel& c, int P, index_t m, index_t jb) {
  return c.c_fact * panel_flops(m, jb) + static_cast<double>(jb) * 2.0 * ceil_log2(P) * c.latency_s;
}

inline index_t panel_width(const RunConfig& cfg, index_t k) {
  return std::min<index_t>(cfg.nb, cfg.n - k * cfg.nb);
}

inline Sections sections_raw(const RunConfig& cfg, const BlockCyclicMap& map, int p, int q, index_t j) {
  Sections s;
  const index_t nblocks = map.num_blocks();
  s.j = j;
  s.jb = static_cast<int>(panel_width(cfg, j));
  s.has_next = j + 1 < nblocks;
  s.next_jb = s.has_next ? static_cast<int>(panel_width(cfg, j + 1)) : 0;
  s.factor_next = s.has_next && map.owner((j + 1) * cfg.nb, Axis::Column) == q;

  const index_t trail = std::min<index_t>((j + 1) * cfg.nb, cfg.n);
  s.mloc = map.local_rows(p);
  s.r0 = map.local_begin(j * cfg.nb, Axis::Row, p);
  s.rb = map.local_begin(trail, Axis::Row, p);

  s.ncols = map.local_cols(q);
  s.t = map.local_begin(trail, Axis::Column, q);
  s.la_end = s.t + (cfg.lookahead && s.factor_next ? s.next_jb : 0);
  s.split_lc = cfg.left_columns(q);
  s.split = cfg.split && cfg.lookahead && s.has_next && s.split_lc > 0 && s.split_lc < s.ncols &&
            s.la_end < s.split_lc;
  return s;
}

inline Sections sections(const RunConfig& cfg, const BlockCyclicMap& map, int p, int q, index_t j) {
  Sections s = sections_raw(cfg, map, p, q, j);
  // Split iterations form a prefix, and the prologue exchanges the right
  // section for panel 0 when iteration 0 splits.
  s.pending = j == 0 ? s.split : sections_raw(cfg, map, p, q, j - 1).split;
  return s;
}

}  // namespace dhpl::detail
