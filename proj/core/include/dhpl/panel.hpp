#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhpl/grid.hpp"
#include "dhpl/matrix.hpp"
#include "dhpl/pivot.hpp"

namespace dhpl {

enum class FactVariant { Right, Left, Crout, Recursive };

const char* to_string(FactVariant v);
FactVariant fact_variant_from_string(const std::string& s);

struct FactConfig {
  FactVariant variant = FactVariant::Recursive;
  int ndiv = 2;      // subpanels per recursion level
  int base_nb = 16;  // recursion stops at this width
  int threads = 1;   // team size T

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate(int nb) const;
};

/// Local piece of a tall-skinny panel: `rows` x `width` column-major data,
/// split into tiles of `tile_rows` consecutive rows.
///
/// The `width` x `width` diagonal block (global rows diag_row ...) is kept in
/// `top`, replicated on every rank of the process column. On the rank owning
/// it, local rows [0, width) alias that block and are refreshed from `top`
/// once factorization completes.
struct Panel {
  index_t rows = 0;
  int width = 0;
  int tile_rows = 0;
  std::vector<double> data;
  std::vector<index_t> global_row;
  index_t diag_row = 0;
  bool owns_diag = true;
  std::vector<double> top;
  std::vector<index_t> ipiv;

  double& at(index_t i, index_t j) { return data[i + j * rows]; }
  double at(index_t i, index_t j) const { return data[i + j * rows]; }
  double& top_at(index_t i, index_t j) { return top[i + j * width]; }
  double top_at(index_t i, index_t j) const { return top[i + j * width]; }
  int tile_count() const { return rows == 0 ? 0 : static_cast<int>((rows + tile_rows - 1) / tile_rows); }
};

/// Single-process panel over a copy of `a` (rows are global rows 0..M-1).
Panel make_local_panel(ConstMatrixView a, int tile_rows);

/// tile t -> thread t mod T.
std::vector<int> assign_tiles(index_t rows, index_t tile_rows, int threads);

/// Column-wide side of the pivot protocol, used only by the main thread.
class PivotExchange {
 public:
  virtual ~PivotExchange() = default;
  /// Combine this rank's best candidate for `column` with the rest of the
  /// process column; every rank gets the same winner.
  virtual PivotCandidate reduce(const PivotCandidate& local, int column) = 0;
  /// Replicate the diagonal block from its owner onto every rank.
  virtual void share_top(std::vector<double>& top) = 0;
};

struct SingularPanelError : std::runtime_error {
  SingularPanelError(index_t col, const std::string& what) : std::runtime_error(what), column(col) {}
  index_t column;
};

/// Per-thread write log for checking tile ownership. Tile -1 is the
/// replicated diagonal-block workspace on ranks that do not own it.
class AccessLog {
 public:
  struct Write {
    int thread;
    int tile;
    bool pivot;
  };
  explicit AccessLog(int threads) : per_thread_(threads) {}
  void record(int thread, int tile, bool pivot) { per_thread_[thread].push_back({thread, tile, pivot}); }
  std::vector<Write> entries() const;

 private:
  std::vector<std::vector<Write>> per_thread_;
};

/// LU with partial pivoting of the panel in place (unit lower L below the
/// diagonal, U on and above), pivots recorded as global rows in ipiv.
/// With `exchange == nullptr` the panel must own its diagonal block and the
/// factorization is process-local. Throws SingularPanelError on an exactly
/// zero pivot column.
void panel_factorize(Panel& panel, const FactConfig& cfg, PivotExchange* exchange = nullptr,
                     AccessLog* log = nullptr);

/// M * NB^2 - NB^3 / 3
double panel_flops(index_t rows, index_t width);

struct PanelBenchResult {
  double gflops = 0.0;
  double median_seconds = 0.0;
};

PanelBenchResult bench_panel(index_t rows, int width, const FactConfig& cfg, int reps,
                             std::uint64_t seed = 1);

}  // namespace dhpl
