#include "dhpl/engine.hpp"

#include <algorithm>
#include <string>

namespace dhpl {

const char* to_string(CommandKind k) {
  switch (k) {
    case CommandKind::TrsmUpdate: return "trsm_update";
    case CommandKind::GemmUpdate: return "gemm_update";
    case CommandKind::GatherRows: return "gather_rows";
    case CommandKind::ScatterRows: return "scatter_rows";
    case CommandKind::ToHost: return "to_host";
    case CommandKind::ToEngine: return "to_engine";
  }
  return "?";
}

EngineCommand EngineCommand::gemm(ConstMatrixView l, ConstMatrixView u, MatrixView c) {
  return {CommandKind::GemmUpdate, l, u, c, {}};
}
EngineCommand EngineCommand::trsm(ConstMatrixView l, MatrixView u) {
  return {CommandKind::TrsmUpdate, l, {}, u, {}};
}
EngineCommand EngineCommand::gather(ConstMatrixView src, std::vector<index_t> rows, MatrixView packed) {
  return {CommandKind::GatherRows, src, {}, packed, std::move(rows)};
}
EngineCommand EngineCommand::scatter(ConstMatrixView packed, std::vector<index_t> rows, MatrixView dst) {
  return {CommandKind::ScatterRows, packed, {}, dst, std::move(rows)};
}
EngineCommand EngineCommand::to_host(ConstMatrixView src, MatrixView dst) {
  return {CommandKind::ToHost, src, {}, dst, {}};
}
EngineCommand EngineCommand::to_engine(ConstMatrixView src, MatrixView dst) {
  return {CommandKind::ToEngine, src, {}, dst, {}};
}

std::size_t EngineCommand::bytes() const {
  switch (kind) {
    case CommandKind::GatherRows:
    case CommandKind::ScatterRows:
      return static_cast<std::size_t>(rows.size()) * static_cast<std::size_t>(out.cols) * sizeof(double);
    case CommandKind::ToHost:
    case CommandKind::ToEngine:
      return static_cast<std::size_t>(out.rows * out.cols) * sizeof(double);
    default: return 0;
  }
}

double EngineCommand::flops() const {
  const auto m = static_cast<double>(out.rows);
  const auto n = static_cast<double>(out.cols);
  switch (kind) {
    case CommandKind::GemmUpdate: return 2.0 * m * n * static_cast<double>(a.cols);
    case CommandKind::TrsmUpdate: return m * m * n;
    default: return 0.0;
  }
}

double command_cost(const EngineCommand& cmd, const EngineCoefficients& c) {
  switch (cmd.kind) {
    case CommandKind::GemmUpdate: return c.c_gemm * cmd.flops();
    case CommandKind::TrsmUpdate: return c.c_trsm * cmd.flops();
    case CommandKind::GatherRows:
    case CommandKind::ScatterRows: return c.c_swap * static_cast<double>(cmd.bytes());
    case CommandKind::ToHost:
    case CommandKind::ToEngine: return c.c_xfer * static_cast<double>(cmd.bytes());
  }
  return 0.0;
}

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("engine command shape mismatch: ") + what);
}

void validate(const EngineCommand& c) {
  switch (c.kind) {
    case CommandKind::GemmUpdate:
      check(c.a.rows == c.out.rows && c.a.cols == c.b.rows && c.b.cols == c.out.cols,
            "gemm (m x k)(k x n) into m x n");
      break;
    case CommandKind::TrsmUpdate:
      check(c.a.rows == c.a.cols && c.a.rows == c.out.rows, "trsm k x k against k x n");
      break;
    case CommandKind::GatherRows:
      check(static_cast<index_t>(c.rows.size()) == c.out.rows && c.a.cols == c.out.cols,
            "gather packed shape");
      for (index_t r : c.rows) check(r >= 0 && r < c.a.rows, "gather row index");
      break;
    case CommandKind::ScatterRows:
      check(static_cast<index_t>(c.rows.size()) == c.a.rows && c.a.cols == c.out.cols,
            "scatter packed shape");
      for (index_t r : c.rows) check(r >= 0 && r < c.out.rows, "scatter row index");
      break;
    case CommandKind::ToHost:
    case CommandKind::ToEngine:
      check(c.a.rows == c.out.rows && c.a.cols == c.out.cols, "transfer shape");
      break;
  }
}

// C -= A * B. Each C element accumulates its k products in ascending order,
// so results match a plain triple loop bit for bit.
void gemm_kernel(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  constexpr index_t MR = 4;
  constexpr index_t NR = 4;
  const index_t m = c.rows;
  const index_t n = c.cols;
  const index_t k = a.cols;
  if (m == 0 || n == 0 || k == 0) return;
  index_t j = 0;
  for (; j + NR <= n; j += NR) {
    index_t i = 0;
    for (; i + MR <= m; i += MR) {
      double acc[NR][MR];
      for (index_t jj = 0; jj < NR; ++jj) {
        for (index_t ii = 0; ii < MR; ++ii) acc[jj][ii] = c(i + ii, j + jj);
      }
      for (index_t s = 0; s < k; ++s) {
        const double* as = a.data + i + s * a.ld;
        for (index_t jj = 0; jj < NR; ++jj) {
          const double bs = b(s, j + jj);
          for (index_t ii = 0; ii < MR; ++ii) acc[jj][ii] -= as[ii] * bs;
        }
      }
      for (index_t jj = 0; jj < NR; ++jj) {
        for (index_t ii = 0; ii < MR; ++ii) c(i + ii, j + jj) = acc[jj][ii];
      }
    }
    for (; i < m; ++i) {
      for (index_t jj = 0; jj < NR; ++jj) {
        double acc = c(i, j + jj);
        for (index_t s = 0; s < k; ++s) acc -= a(i, s) * b(s, j + jj);
        c(i, j + jj) = acc;
      }
    }
  }
  for (; j < n; ++j) {
    for (index_t s = 0; s < k; ++s) {
      const double bs = b(s, j);
      const double* as = a.data + s * a.ld;
      double* cj = c.data + j * c.ld;
      for (index_t i = 0; i < m; ++i) cj[i] -= as[i] * bs;
    }
  }
}

void trsm_kernel(ConstMatrixView l, MatrixView u) {
  for (index_t j = 0; j < u.cols; ++j) {
    for (index_t r = 0; r < u.rows; ++r) {
      double acc = u(r, j);
      for (index_t s = 0; s < r; ++s) acc -= l(r, s) * u(s, j);
      u(r, j) = acc;
    }
  }
}

void copy_kernel(ConstMatrixView src, MatrixView dst) {
  for (index_t j = 0; j < src.cols; ++j) {
    std::copy(src.data + j * src.ld, src.data + j * src.ld + src.rows, dst.data + j * dst.ld);
  }
}

}  // namespace

void execute_command(const EngineCommand& c) {
  validate(c);
  switch (c.kind) {
    case CommandKind::GemmUpdate: gemm_kernel(c.a, c.b, c.out); break;
    case CommandKind::TrsmUpdate: trsm_kernel(c.a, c.out); break;
    case CommandKind::GatherRows:
      for (index_t j = 0; j < c.out.cols; ++j) {
        for (std::size_t r = 0; r < c.rows.size(); ++r) c.out(static_cast<index_t>(r), j) = c.a(c.rows[r], j);
      }
      break;
    case CommandKind::ScatterRows:
      for (index_t j = 0; j < c.out.cols; ++j) {
        for (std::size_t r = 0; r < c.rows.size(); ++r) c.out(c.rows[r], j) = c.a(static_cast<index_t>(r), j);
      }
      break;
    case CommandKind::ToHost:
    case CommandKind::ToEngine:
      if (!c.a.empty()) copy_kernel(c.a, c.out);
      break;
  }
}

// ---------------------------------------------------------------------------

double EngineEvent::start() const { return state_ ? state_->start : 0.0; }
double EngineEvent::end() const { return state_ ? state_->end : 0.0; }

UpdateEngine::UpdateEngine(TimeMode mode, EngineCoefficients coeffs, Clock& host)
    : mode_(mode), coeffs_(coeffs), host_(&host) {
  if (coeffs.c_gemm < 0 || coeffs.c_trsm < 0 || coeffs.c_swap < 0 || coeffs.c_xfer < 0) {
    throw std::invalid_argument("engine cost coefficients must be >= 0");
  }
  if (mode_ == TimeMode::Real) thread_ = std::thread([this] { worker(); });
}

UpdateEngine::~UpdateEngine() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void UpdateEngine::account(const EngineEvent::State& s) {
  const double d = s.end - s.start;
  usage_.busy += d;
  if (s.kind == CommandKind::ToHost || s.kind == CommandKind::ToEngine) usage_.transfer += d;
  if (usage_.first_start < 0) usage_.first_start = s.start;
  usage_.last_end = std::max(usage_.last_end, s.end);
}

EngineEvent UpdateEngine::enqueue(EngineCommand cmd) {
  validate(cmd);
  auto state = std::make_shared<EngineEvent::State>();
  state->kind = cmd.kind;
  state->owner = this;
  std::unique_lock lock(mu_);
  if (shut_down_) throw EngineError("enqueue on a shut down engine");
  if (mode_ == TimeMode::Model) {
    state->start = std::max(host_->now(), model_tail_);
    state->end = state->start + command_cost(cmd, coeffs_);
    model_tail_ = state->end;
    state->done = true;
    account(*state);
    last_ = state;
    return EngineEvent(state);
  }
  queue_.push_back({std::move(cmd), state});
  last_ = state;
  lock.unlock();
  cv_.notify_all();
  return EngineEvent(state);
}

double UpdateEngine::wait(const EngineEvent& ev) {
  if (!ev.state_) throw std::invalid_argument("wait on an empty event");
  if (ev.state_->owner != this) throw std::invalid_argument("event belongs to another engine");
  if (mode_ == TimeMode::Model) {
    host_->wait_until(ev.state_->end);
    return ev.state_->end;
  }
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return ev.state_->done || shut_down_ || error_; });
  if (error_) std::rethrow_exception(error_);
  if (!ev.state_->done) throw EngineError("engine shut down before the event completed");
  return ev.state_->end;
}

double UpdateEngine::wait_all() {
  std::shared_ptr<EngineEvent::State> last;
  {
    std::lock_guard lock(mu_);
    last = last_;
  }
  if (!last) return host_->now();
  return wait(EngineEvent(last));
}

void UpdateEngine::shutdown() {
  {
    std::lock_guard lock(mu_);
    shut_down_ = true;
    queue_.clear();
  }
  cv_.notify_all();
}

UpdateEngine::Usage UpdateEngine::usage() const {
  std::lock_guard lock(mu_);
  return usage_;
}

void UpdateEngine::reset_usage() {
  std::lock_guard lock(mu_);
  usage_ = {};
}

void UpdateEngine::worker() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) return;
    Item item = std::move(queue_.front());
    queue_.pop_front();
    lock.unlock();
    const double t0 = Clock::wall();
    std::exception_ptr err;
    try {
      execute_command(item.cmd);
    } catch (...) {
      err = std::current_exception();
    }
    const double t1 = Clock::wall();
    lock.lock();
    item.state->start = t0;
    item.state->end = t1;
    item.state->done = true;
    if (err && !error_) error_ = err;
    account(*item.state);
    cv_.notify_all();
  }
}

}  // namespace dhpl
