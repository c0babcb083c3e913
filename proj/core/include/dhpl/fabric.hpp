#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhpl/clock.hpp"
#include "dhpl/grid.hpp"
#include "dhpl/matrix.hpp"
#include "dhpl/pivot.hpp"

namespace dhpl {

using Payload = std::vector<std::byte>;

Payload to_payload(std::span<const double> values);
std::vector<double> doubles_from(const Payload& p);

struct FabricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FabricTimeout : FabricError {
  using FabricError::FabricError;
};

/// Linear message cost: latency + bytes * inverse bandwidth.
struct DelayModel {
  double latency_s = 0.0;
  double inv_bandwidth_s_per_byte = 0.0;
  bool enabled = false;

  double delay(std::size_t bytes) const {
    return enabled ? latency_s + static_cast<double>(bytes) * inv_bandwidth_s_per_byte : 0.0;
  }
  double injection(std::size_t bytes) const {
    return enabled ? static_cast<double>(bytes) * inv_bandwidth_s_per_byte : 0.0;
  }
};

/// Set of rank workers sharing per-rank mailboxes. Delivery is reliable and
/// FIFO per (sender, receiver, tag).
class World {
 public:
  explicit World(ProcessGrid grid, DelayModel delay = {},
                 std::chrono::milliseconds timeout = std::chrono::seconds(120));
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const ProcessGrid& grid() const { return grid_; }
  const DelayModel& delay() const { return delay_; }
  int size() const { return grid_.size(); }

  void post(int src, int dst, std::int64_t tag, Payload payload, double ready_at);
  /// Blocks until a matching message exists. Throws FabricTimeout after the
  /// configured timeout and FabricError once the world is shut down.
  Payload take(int dst, int src, std::int64_t tag, double* ready_at);

  /// Wake every blocked receiver with an error; later sends also fail.
  void shutdown();
  bool is_shut_down() const { return shut_down_.load(); }

  std::uint64_t messages_sent() const { return messages_.load(); }
  std::uint64_t bytes_sent() const { return bytes_.load(); }
  void reset_counters() {
    messages_ = 0;
    bytes_ = 0;
  }

 private:
  struct Envelope {
    Payload payload;
    double ready_at;
  };
  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::pair<int, std::int64_t>, std::deque<Envelope>> queues;
  };

  ProcessGrid grid_;
  DelayModel delay_;
  std::chrono::milliseconds timeout_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::atomic<bool> shut_down_{false};
  std::atomic<std::uint64_t> messages_{0};
  std::atomic<std::uint64_t> bytes_{0};
};

/// Communicator over an ordered subset of world ranks, bound to the calling
/// rank's clock. Used by exactly one rank worker.
class Comm {
 public:
  Comm(World& world, std::vector<int> members, int me, int space, Clock& clock, DelayModel delay);

  int size() const { return static_cast<int>(members_.size()); }
  int rank() const { return me_; }
  int world_rank(int idx) const { return members_[idx]; }
  World& world() const { return *world_; }
  Clock& clock() const { return *clock_; }
  const DelayModel& delay() const { return delay_; }

  void send(int to, std::int64_t tag, Payload payload);
  Payload recv(int from, std::int64_t tag);

 private:
  std::int64_t key(std::int64_t tag) const { return (static_cast<std::int64_t>(space_) << 56) ^ tag; }

  World* world_;
  std::vector<int> members_;
  int me_;
  int space_;
  Clock* clock_;
  DelayModel delay_;
};

Comm make_world_comm(World& world, int rank, Clock& clock);
/// Ranks sharing this rank's process column, ordered by process row.
Comm make_column_comm(World& world, int rank, Clock& clock, DelayModel delay);
/// Ranks sharing this rank's process row, ordered by process column.
Comm make_row_comm(World& world, int rank, Clock& clock, DelayModel delay);

enum class BcastAlgo { OneRing, BinaryTree };

const char* to_string(BcastAlgo algo);
BcastAlgo bcast_algo_from_string(const std::string& s);

struct Hop {
  int from = 0;
  int to = 0;
  friend bool operator==(const Hop&, const Hop&) = default;
};

/// Collective broadcast of `payload` from comm rank `root`. Returns the hops
/// this rank sent, in order.
std::vector<Hop> bcast(Comm& comm, int root, Payload& payload, BcastAlgo algo, std::int64_t tag);

/// Row-wise panel broadcast (LBCAST).
inline std::vector<Hop> row_bcast(Comm& row, int root, Payload& payload, BcastAlgo algo,
                                  std::int64_t tag) {
  return bcast(row, root, payload, algo, tag);
}

/// Broadcast of a matrix whose shape is known on every rank.
void bcast_matrix(Comm& comm, int root, LocalMatrix& a, BcastAlgo algo, std::int64_t tag);

/// Column-wide pivot reduction: binary-tree reduce to comm rank 0, then
/// binary-tree broadcast back. Every rank returns the same winner.
PivotCandidate column_maxloc(Comm& column, const PivotCandidate& mine, std::int64_t tag);

/// Net row movement implied by applying ipiv[k]: swap(first_row + k, ipiv[k])
/// for k = 0..width-1 in sequence.
struct SwapPlan {
  struct Move {
    index_t src = 0;
    index_t dst = 0;
  };
  index_t first_row = 0;
  int width = 0;
  /// Source row of every top position first_row + k.
  std::vector<index_t> top_sources;
  /// Displaced rows moving to positions below the top block.
  std::vector<Move> down_moves;
};

/// Throws std::out_of_range if any pivot lies outside [first_row, n).
SwapPlan make_swap_plan(index_t first_row, std::span<const index_t> ipiv, index_t n);

/// Global rows process row p must gather before the exchange, ascending.
std::vector<index_t> swap_gather_list(const SwapPlan& plan, const BlockCyclicMap& map, int p);

struct SwapResult {
  /// Top block after the swap (width x section columns); filled on the
  /// process row owning first_row, empty elsewhere.
  LocalMatrix u;
  /// Rows received for positions below the top block, with their local
  /// destination row indices.
  std::vector<index_t> dst_local;
  LocalMatrix rows;
};

/// Row-swap exchange for one column section. `gathered` holds the rows of
/// swap_gather_list() in order. One point-to-point message per row that
/// changes owner; nothing is sent for an identity permutation.
SwapResult column_rowswap(Comm& column, const BlockCyclicMap& map, const SwapPlan& plan,
                          const LocalMatrix& gathered, std::int64_t tag);

}  // namespace dhpl
