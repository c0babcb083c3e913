#pragma once

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "dhpl/clock.hpp"
#include "dhpl/matrix.hpp"

namespace dhpl {

enum class CommandKind { TrsmUpdate, GemmUpdate, GatherRows, ScatterRows, ToHost, ToEngine };

const char* to_string(CommandKind k);

/// Operand conventions per kind:
///   GemmUpdate   out -= a * b            (m x k)(k x n) into m x n
///   TrsmUpdate   out := a^-1 * out       a unit lower k x k, out k x n
///   GatherRows   out(r, :) = a(rows[r], :)
///   ScatterRows  out(rows[r], :) = a(r, :)
///   ToHost/ToEngine  out = a
struct EngineCommand {
  CommandKind kind = CommandKind::GemmUpdate;
  ConstMatrixView a;
  ConstMatrixView b;
  MatrixView out;
  std::vector<index_t> rows;

  static EngineCommand gemm(ConstMatrixView l, ConstMatrixView u, MatrixView c);
  static EngineCommand trsm(ConstMatrixView l, MatrixView u);
  static EngineCommand gather(ConstMatrixView src, std::vector<index_t> rows, MatrixView packed);
  static EngineCommand scatter(ConstMatrixView packed, std::vector<index_t> rows, MatrixView dst);
  static EngineCommand to_host(ConstMatrixView src, MatrixView dst);
  static EngineCommand to_engine(ConstMatrixView src, MatrixView dst);

  std::size_t bytes() const;
  double flops() const;
};

/// Cost-model coefficients: seconds per flop (gemm, trsm) or per byte
/// (swap for gather/scatter, xfer for host transfers).
struct EngineCoefficients {
  double c_gemm = 0.0;
  double c_trsm = 0.0;
  double c_swap = 0.0;
  double c_xfer = 0.0;
};

/// Modeled duration of a command.
double command_cost(const EngineCommand& cmd, const EngineCoefficients& c);

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Completion token. Completes exactly once; commands complete in enqueue
/// order.
class EngineEvent {
 public:
  EngineEvent() = default;
  bool valid() const { return state_ != nullptr; }
  double start() const;
  double end() const;

 private:
  friend class UpdateEngine;
  struct State {
    bool done = false;
    double start = 0.0;
    double end = 0.0;
    CommandKind kind = CommandKind::GemmUpdate;
    const void* owner = nullptr;
  };
  explicit EngineEvent(std::shared_ptr<State> s) : state_(std::move(s)) {}
  std::shared_ptr<State> state_;
};

/// Execute a command synchronously on the calling thread.
void execute_command(const EngineCommand& cmd);

/// In-order asynchronous command queue standing in for an accelerator.
/// Real mode runs commands on a dedicated worker thread; Model mode performs
/// no arithmetic and completes each command at
///   max(host now, previous completion) + command_cost.
class UpdateEngine {
 public:
  UpdateEngine(TimeMode mode, EngineCoefficients coeffs, Clock& host);
  ~UpdateEngine();
  UpdateEngine(const UpdateEngine&) = delete;
  UpdateEngine& operator=(const UpdateEngine&) = delete;

  TimeMode mode() const { return mode_; }

  /// Throws std::invalid_argument on non-conforming operands and
  /// EngineError after shutdown.
  EngineEvent enqueue(EngineCommand cmd);
  /// Block until `ev` completes; returns its completion time. In Model mode
  /// the host clock advances to that time.
  double wait(const EngineEvent& ev);
  /// Wait for everything enqueued so far.
  double wait_all();
  void shutdown();

  struct Usage {
    double busy = 0.0;      // seconds spent executing commands
    double transfer = 0.0;  // of which host <-> engine copies
    double first_start = -1.0;
    double last_end = 0.0;
  };
  /// Accumulated usage of completed commands since the last reset.
  Usage usage() const;
  void reset_usage();

 private:
  struct Item {
    EngineCommand cmd;
    std::shared_ptr<EngineEvent::State> state;
  };
  void worker();
  void account(const EngineEvent::State& s);

  TimeMode mode_;
  EngineCoefficients coeffs_;
  Clock* host_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> queue_;
  std::shared_ptr<EngineEvent::State> last_;
  bool stop_ = false;
  bool shut_down_ = false;
  std::exception_ptr error_;
  Usage usage_;
  double model_tail_ = 0.0;
  std::thread thread_;
};

}  // namespace dhpl
