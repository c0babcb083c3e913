#include "dhpl/panel.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "dhpl/generate.hpp"

namespace dhpl {

const char* to_string(FactVariant v) {
  switch (v) {
    case FactVariant::Right: return "right";
    case FactVariant::Left: return "left";
    case FactVariant::Crout: return "crout";
    case FactVariant::Recursive: return "recursive";
  }
  return "?";
}

FactVariant fact_variant_from_string(const std::string& s) {
  if (s == "right") return FactVariant::Right;
  if (s == "left") return FactVariant::Left;
  if (s == "crout") return FactVariant::Crout;
  if (s == "recursive") return FactVariant::Recursive;
  throw std::invalid_argument("unknown factorization variant '" + s +
                              "' (expected right, left, crout or recursive)");
}

void FactConfig::validate(int nb) const {
  if (threads < 1) throw std::invalid_argument("thread team size must be >= 1");
  if (variant == FactVariant::Recursive && ndiv < 2) {
    throw std::invalid_argument("NDIV must be >= 2 for the recursive variant");
  }
  if (base_nb < 1 || base_nb > nb) {
    throw std::invalid_argument("base block size must satisfy 1 <= base_nb <= NB");
  }
}

std::vector<int> assign_tiles(index_t rows, index_t tile_rows, int threads) {
  const index_t tiles = rows <= 0 ? 0 : (rows + tile_rows - 1) / tile_rows;
  std::vector<int> owner(static_cast<std::size_t>(tiles));
  for (index_t t = 0; t < tiles; ++t) owner[t] = static_cast<int>(t % threads);
  return owner;
}

Panel make_local_panel(ConstMatrixView a, int tile_rows) {
  Panel p;
  p.rows = a.rows;
  p.width = static_cast<int>(a.cols);
  p.tile_rows = tile_rows;
  p.data.resize(static_cast<std::size_t>(a.rows * a.cols));
  for (index_t j = 0; j < a.cols; ++j) {
    for (index_t i = 0; i < a.rows; ++i) p.at(i, j) = a(i, j);
  }
  p.global_row.resize(static_cast<std::size_t>(a.rows));
  for (index_t i = 0; i < a.rows; ++i) p.global_row[i] = i;
  p.diag_row = 0;
  p.owns_diag = true;
  return p;
}

std::vector<AccessLog::Write> AccessLog::entries() const {
  std::vector<Write> all;
  for (const auto& v : per_thread_) all.insert(all.end(), v.begin(), v.end());
  return all;
}

double panel_flops(index_t rows, index_t width) {
  const auto m = static_cast<double>(rows);
  const auto n = static_cast<double>(width);
  return m * n * n - n * n * n / 3.0;
}

namespace {

struct Segment {
  index_t begin;
  index_t end;
  int tile;
};

struct LocalBest {
  double value = -1.0;
  index_t row = -1;  // local body row, or -(top row) - 2 for a top row
};

/// Shared state of one panel_factorize call. Every team member runs the same
/// variant routine; sections guarded by `main()` run on thread 0 only and are
/// always followed by a barrier.
class Factorizer {
 public:
  Factorizer(Panel& p, const FactConfig& cfg, PivotExchange* ex, AccessLog* log)
      : p_(p), cfg_(cfg), ex_(ex), log_(log), team_(cfg.threads), barrier_(cfg.threads, Latch{this}),
        best_(cfg.threads), segs_(cfg.threads) {
    const index_t body = p.owns_diag ? p.width : 0;
    const auto owner = assign_tiles(p.rows, p.tile_rows, team_);
    for (int t = 0; t < static_cast<int>(owner.size()); ++t) {
      const index_t b = std::max<index_t>(static_cast<index_t>(t) * p.tile_rows, body);
      const index_t e = std::min<index_t>(static_cast<index_t>(t + 1) * p.tile_rows, p.rows);
      if (b < e) segs_[owner[t]].push_back({b, e, t});
    }
  }

  void run() {
    std::vector<std::thread> workers;
    for (int t = 1; t < team_; ++t) workers.emplace_back([this, t] { body(t); });
    body(0);
    for (auto& w : workers) w.join();
    if (error_) std::rethrow_exception(error_);
  }

 private:
  // -- team plumbing -------------------------------------------------------

  // The abort decision is latched when a phase completes. Reading abort_
  // directly after the barrier would race with thread 0 failing in the next
  // phase and leave it waiting alone.
  bool sync() {
    barrier_.arrive_and_wait();
    return !stopped_;
  }

  template <typename F>
  void main_section(int tid, F&& f) {
    if (tid != 0 || abort_.load()) return;
    try {
      f();
    } catch (...) {
      error_ = std::current_exception();
      abort_.store(true, std::memory_order_release);
    }
  }

  void body(int tid) {
    switch (cfg_.variant) {
      case FactVariant::Right: right(tid, 0, p_.width); break;
      case FactVariant::Left: left(tid, 0, p_.width); break;
      case FactVariant::Crout: crout(tid, 0, p_.width); break;
      case FactVariant::Recursive: recursive(tid, 0, p_.width); break;
    }
  }

  int top_tile() const { return p_.owns_diag ? 0 : -1; }

  void note(int tid, int tile, bool pivot = false) {
    if (log_) log_->record(tid, tile, pivot);
  }

  // -- pivoting --------------------------------------------------------------

  /// Search, reduce, swap and scale column k. Returns false if the team must
  /// stop.
  bool pivot(int tid, int k) {
    LocalBest best;
    if (tid == 0 && p_.owns_diag) {
      for (int r = k; r < p_.width; ++r) {
        const double v = std::fabs(p_.top_at(r, k));
        if (v > best.value) best = {v, -static_cast<index_t>(r) - 2};
      }
    }
    for (const auto& s : segs_[tid]) {
      const double* col = p_.data.data() + static_cast<index_t>(k) * p_.rows;
      for (index_t i = s.begin; i < s.end; ++i) {
        const double v = std::fabs(col[i]);
        if (v > best.value) best = {v, i};
      }
    }
    best_[tid] = best;
    if (!sync()) return false;

    main_section(tid, [&] { exchange_and_swap(k); });
    if (!sync()) return false;

    const double inv = 1.0 / p_.top_at(k, k);
    main_section(tid, [&] {
      for (int r = k + 1; r < p_.width; ++r) p_.top_at(r, k) *= inv;
      note(0, top_tile());
    });
    for (const auto& s : segs_[tid]) {
      double* col = p_.data.data() + static_cast<index_t>(k) * p_.rows;
      for (index_t i = s.begin; i < s.end; ++i) col[i] *= inv;
      note(tid, s.tile);
    }
    return true;
  }

  index_t global_of(const LocalBest& b) const {
    if (b.row < -1) return p_.diag_row + (-b.row - 2);
    return p_.global_row[b.row];
  }

  void exchange_and_swap(int k) {
    // Reduce the team's candidates; rows are scanned in ascending global
    // order so strict comparison already prefers the smaller row.
    PivotCandidate local;
    LocalBest winner;
    for (const auto& b : best_) {
      if (b.value < 0) continue;
      PivotCandidate c{b.value, global_of(b), {}};
      if (local.empty() || beats(c, local)) {
        local = c;
        winner = b;
      }
    }
    if (!local.empty()) {
      local.payload.resize(p_.width);
      for (int j = 0; j < p_.width; ++j) {
        local.payload[j] = winner.row < -1 ? p_.top_at(-winner.row - 2, j) : p_.at(winner.row, j);
      }
    }

    PivotCandidate g = ex_ ? ex_->reduce(local, k) : std::move(local);
    if (g.empty() || g.value == 0.0) {
      const index_t col = p_.diag_row + k;
      throw SingularPanelError(col, "singular matrix: zero pivot column " + std::to_string(col));
    }
    p_.ipiv[k] = g.global_row;

    const index_t top_end = p_.diag_row + p_.width;
    if (g.global_row >= p_.diag_row && g.global_row < top_end) {
      const int r = static_cast<int>(g.global_row - p_.diag_row);
      if (r != k) {
        for (int j = 0; j < p_.width; ++j) std::swap(p_.top_at(k, j), p_.top_at(r, j));
      }
      note(0, top_tile(), true);
      return;
    }

    std::vector<double> old(p_.width);
    for (int j = 0; j < p_.width; ++j) {
      old[j] = p_.top_at(k, j);
      p_.top_at(k, j) = g.payload[j];
    }
    note(0, top_tile(), true);

    const index_t body = p_.owns_diag ? p_.width : 0;
    const auto first = p_.global_row.begin() + body;
    const auto it = std::lower_bound(first, p_.global_row.end(), g.global_row);
    if (it != p_.global_row.end() && *it == g.global_row) {
      const index_t i = it - p_.global_row.begin();
      for (int j = 0; j < p_.width; ++j) p_.at(i, j) = old[j];
      note(0, static_cast<int>(i / p_.tile_rows), true);
    }
  }

  // -- updates ---------------------------------------------------------------
  // Every update subtracts products into the target element one at a time in
  // ascending inner index, so all variants and team sizes perform identical
  // floating-point operations on each element.

  /// rows (top rows [r0, width) and this thread's body) of columns [c0, c1)
  /// -= rows(:, [s0, s1)) * top([s0, s1), [c0, c1))
  void update_rows(int tid, int r0, int s0, int s1, int c0, int c1) {
    if (s0 >= s1 || c0 >= c1) return;
    main_section(tid, [&] {
      for (int c = c0; c < c1; ++c) {
        for (int s = s0; s < s1; ++s) {
          const double u = p_.top_at(s, c);
          for (int r = r0; r < p_.width; ++r) p_.top_at(r, c) -= p_.top_at(r, s) * u;
        }
      }
      if (r0 < p_.width) note(0, top_tile());
    });
    for (const auto& seg : segs_[tid]) {
      for (int c = c0; c < c1; ++c) {
        double* dst = p_.data.data() + static_cast<index_t>(c) * p_.rows;
        for (int s = s0; s < s1; ++s) {
          const double u = p_.top_at(s, c);
          const double* src = p_.data.data() + static_cast<index_t>(s) * p_.rows;
          for (index_t i = seg.begin; i < seg.end; ++i) dst[i] -= src[i] * u;
        }
      }
      note(tid, seg.tile);
    }
  }

  /// Forward substitution with the unit lower block top([s0, s1), [s0, s1))
  /// on top rows [s0, s1) of columns [c0, c1). Main thread only.
  void trsm_top(int s0, int s1, int c0, int c1) {
    for (int c = c0; c < c1; ++c) {
      for (int r = s0; r < s1; ++r) {
        double acc = p_.top_at(r, c);
        for (int s = s0; s < r; ++s) acc -= p_.top_at(r, s) * p_.top_at(s, c);
        p_.top_at(r, c) = acc;
      }
    }
    note(0, top_tile());
  }

  // -- variants --------------------------------------------------------------

  void right(int tid, int c0, int c1) {
    for (int k = c0; k < c1; ++k) {
      if (!pivot(tid, k)) return;
      update_rows(tid, k + 1, k, k + 1, k + 1, c1);
    }
  }

  void left(int tid, int c0, int c1) {
    for (int k = c0; k < c1; ++k) {
      main_section(tid, [&] { trsm_top(c0, k, k, k + 1); });
      if (!sync()) return;
      update_rows(tid, k, c0, k, k, k + 1);
      if (!pivot(tid, k)) return;
    }
  }

  void crout(int tid, int c0, int c1) {
    for (int k = c0; k < c1; ++k) {
      if (!sync()) return;
      update_rows(tid, k, c0, k, k, k + 1);
      if (!pivot(tid, k)) return;
      main_section(tid, [&] {
        for (int c = k + 1; c < c1; ++c) {
          double acc = p_.top_at(k, c);
          for (int s = c0; s < k; ++s) acc -= p_.top_at(k, s) * p_.top_at(s, c);
          p_.top_at(k, c) = acc;
        }
        note(0, top_tile());
      });
    }
  }

  void recursive(int tid, int c0, int c1) {
    const int w = c1 - c0;
    if (w <= cfg_.base_nb) {
      right(tid, c0, c1);
      return;
    }
    for (int piece = 0; piece < cfg_.ndiv; ++piece) {
      const int a = c0 + w * piece / cfg_.ndiv;
      const int b = c0 + w * (piece + 1) / cfg_.ndiv;
      if (a == b) continue;
      recursive(tid, a, b);
      if (b == c1) break;
      if (!sync()) return;
      main_section(tid, [&] { trsm_top(a, b, b, c1); });
      if (!sync()) return;
      update_rows(tid, b, a, b, b, c1);
    }
  }

  Panel& p_;
  const FactConfig& cfg_;
  PivotExchange* ex_;
  AccessLog* log_;
  int team_;
  struct Latch {
    Factorizer* f;
    void operator()() noexcept { f->stopped_ = f->abort_.load(std::memory_order_acquire); }
  };
  std::barrier<Latch> barrier_;
  std::atomic<bool> abort_{false};
  bool stopped_ = false;
  std::exception_ptr error_;
  std::vector<LocalBest> best_;
  std::vector<std::vector<Segment>> segs_;
};

}  // namespace

void panel_factorize(Panel& panel, const FactConfig& cfg, PivotExchange* exchange, AccessLog* log) {
  if (panel.width < 1) throw std::invalid_argument("panel width must be >= 1");
  if (panel.tile_rows < 1) throw std::invalid_argument("tile height must be >= 1");
  if (cfg.threads < 1) throw std::invalid_argument("thread team size must be >= 1");
  if (cfg.variant == FactVariant::Recursive && cfg.ndiv < 2) {
    throw std::invalid_argument("NDIV must be >= 2 for the recursive variant");
  }
  if (!exchange && !panel.owns_diag) {
    throw std::invalid_argument("a process-local panel must own its diagonal block");
  }
  if (panel.owns_diag && panel.rows < panel.width) {
    throw std::invalid_argument("panel owning the diagonal block needs at least width rows");
  }

  const int w = panel.width;
  panel.top.assign(static_cast<std::size_t>(w) * w, 0.0);
  if (panel.owns_diag) {
    for (int j = 0; j < w; ++j) {
      for (int i = 0; i < w; ++i) panel.top_at(i, j) = panel.at(i, j);
    }
  }
  if (exchange) exchange->share_top(panel.top);
  panel.ipiv.assign(static_cast<std::size_t>(w), 0);

  Factorizer(panel, cfg, exchange, log).run();

  if (panel.owns_diag) {
    for (int j = 0; j < w; ++j) {
      for (int i = 0; i < w; ++i) panel.at(i, j) = panel.top_at(i, j);
    }
  }
}

PanelBenchResult bench_panel(index_t rows, int width, const FactConfig& cfg, int reps,
                             std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  LocalMatrix a(rows, width);
  for (index_t j = 0; j < width; ++j) {
    for (index_t i = 0; i < rows; ++i) a(i, j) = entry_value(seed, i, j, rows);
  }
  std::vector<double> times;
  times.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    Panel p = make_local_panel(a.view(), width);
    const auto t0 = std::chrono::steady_clock::now();
    panel_factorize(p, cfg);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const double median = reps % 2 ? times[reps / 2] : 0.5 * (times[reps / 2 - 1] + times[reps / 2]);
  return {panel_flops(rows, width) / median / 1e9, median};
}

}  // namespace dhpl
