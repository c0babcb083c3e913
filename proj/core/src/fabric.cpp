#include "dhpl/fabric.hpp"

#include <algorithm>
#include <cstring>
#include <map>

namespace dhpl {

Payload to_payload(std::span<const double> values) {
  Payload p(values.size_bytes());
  if (!values.empty()) std::memcpy(p.data(), values.data(), values.size_bytes());
  return p;
}

std::vector<double> doubles_from(const Payload& p) {
  std::vector<double> v(p.size() / sizeof(double));
  if (!v.empty()) std::memcpy(v.data(), p.data(), v.size() * sizeof(double));
  return v;
}

// ---------------------------------------------------------------------------
// World

World::World(ProcessGrid grid, DelayModel delay, std::chrono::milliseconds timeout)
    : grid_(grid), delay_(delay), timeout_(timeout) {
  if (delay.latency_s < 0 || delay.inv_bandwidth_s_per_byte < 0) {
    throw std::invalid_argument("delay model coefficients must be >= 0");
  }
  boxes_.reserve(grid.size());
  for (int r = 0; r < grid.size(); ++r) boxes_.push_back(std::make_unique<Mailbox>());
}

void World::post(int src, int dst, std::int64_t tag, Payload payload, double ready_at) {
  if (shut_down_) throw FabricError("send on a shut down world");
  if (dst < 0 || dst >= size()) throw std::out_of_range("send: bad destination rank");
  messages_.fetch_add(1, std::memory_order_relaxed);
  bytes_.fetch_add(payload.size(), std::memory_order_relaxed);
  Mailbox& box = *boxes_[dst];
  {
    std::lock_guard lock(box.mu);
    box.queues[{src, tag}].push_back({std::move(payload), ready_at});
  }
  box.cv.notify_all();
}

Payload World::take(int dst, int src, std::int64_t tag, double* ready_at) {
  Mailbox& box = *boxes_[dst];
  std::unique_lock lock(box.mu);
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  const auto key = std::make_pair(src, tag);
  for (;;) {
    if (shut_down_) throw FabricError("receive on a shut down world");
    auto it = box.queues.find(key);
    if (it != box.queues.end() && !it->second.empty()) {
      Envelope env = std::move(it->second.front());
      it->second.pop_front();
      if (it->second.empty()) box.queues.erase(it);
      if (ready_at) *ready_at = env.ready_at;
      return std::move(env.payload);
    }
    if (box.cv.wait_until(lock, deadline) == std::cv_status::timeout) {
      throw FabricTimeout("rank " + std::to_string(dst) + " timed out waiting for rank " +
                          std::to_string(src) + " tag " + std::to_string(tag));
    }
  }
}

void World::shutdown() {
  shut_down_ = true;
  for (auto& box : boxes_) {
    std::lock_guard lock(box->mu);
    box->cv.notify_all();
  }
}

// ---------------------------------------------------------------------------
// Comm

Comm::Comm(World& world, std::vector<int> members, int me, int space, Clock& clock,
           DelayModel delay)
    : world_(&world), members_(std::move(members)), me_(me), space_(space), clock_(&clock),
      delay_(delay) {}

void Comm::send(int to, std::int64_t tag, Payload payload) {
  const std::size_t bytes = payload.size();
  const double ready = clock_->now() + delay_.delay(bytes);
  world_->post(members_[me_], members_[to], key(tag), std::move(payload), ready);
  clock_->charge(delay_.injection(bytes));
}

Payload Comm::recv(int from, std::int64_t tag) {
  double ready = 0.0;
  Payload p = world_->take(members_[me_], members_[from], key(tag), &ready);
  clock_->wait_until(ready);
  return p;
}

Comm make_world_comm(World& world, int rank, Clock& clock) {
  std::vector<int> members(world.size());
  for (int r = 0; r < world.size(); ++r) members[r] = r;
  return Comm(world, std::move(members), rank, 0, clock, world.delay());
}

Comm make_column_comm(World& world, int rank, Clock& clock, DelayModel delay) {
  const ProcessGrid& g = world.grid();
  const int q = g.col_of(rank);
  std::vector<int> members;
  for (int p = 0; p < g.P; ++p) members.push_back(g.rank_of(p, q));
  return Comm(world, std::move(members), g.row_of(rank), 1, clock, delay);
}

Comm make_row_comm(World& world, int rank, Clock& clock, DelayModel delay) {
  const ProcessGrid& g = world.grid();
  const int p = g.row_of(rank);
  std::vector<int> members;
  for (int q = 0; q < g.Q; ++q) members.push_back(g.rank_of(p, q));
  return Comm(world, std::move(members), g.col_of(rank), 2, clock, delay);
}

// ---------------------------------------------------------------------------
// Broadcast

const char* to_string(BcastAlgo algo) {
  return algo == BcastAlgo::OneRing ? "1ring" : "tree";
}

BcastAlgo bcast_algo_from_string(const std::string& s) {
  if (s == "1ring") return BcastAlgo::OneRing;
  if (s == "tree") return BcastAlgo::BinaryTree;
  throw std::invalid_argument("unknown broadcast algorithm '" + s + "' (expected 1ring or tree)");
}

std::vector<Hop> bcast(Comm& comm, int root, Payload& payload, BcastAlgo algo, std::int64_t tag) {
  const int n = comm.size();
  if (root < 0 || root >= n) throw std::invalid_argument("bcast: invalid root");
  std::vector<Hop> hops;
  if (n == 1) return hops;
  const int me = comm.rank();
  const int rel = (me - root + n) % n;
  auto abs = [&](int r) { return (r + root) % n; };

  if (algo == BcastAlgo::OneRing) {
    if (rel > 0) payload = comm.recv(abs(rel - 1), tag);
    if (rel < n - 1) {
      comm.send(abs(rel + 1), tag, payload);
      hops.push_back({me, abs(rel + 1)});
    }
    return hops;
  }

  // Binomial tree rooted at `root`.
  int mask = 1;
  while (mask < n) {
    if (rel & mask) {
      payload = comm.recv(abs(rel - mask), tag);
      break;
    }
    mask <<= 1;
  }
  mask >>= 1;
  while (mask > 0) {
    if (rel + mask < n) {
      comm.send(abs(rel + mask), tag, payload);
      hops.push_back({me, abs(rel + mask)});
    }
    mask >>= 1;
  }
  return hops;
}

void bcast_matrix(Comm& comm, int root, LocalMatrix& a, BcastAlgo algo, std::int64_t tag) {
  if (comm.size() == 1) return;
  const index_t m = a.rows();
  const index_t n = a.cols();
  Payload p;
  if (comm.rank() == root) {
    std::vector<double> packed(static_cast<std::size_t>(m * n));
    for (index_t j = 0; j < n; ++j) {
      for (index_t i = 0; i < m; ++i) packed[i + j * m] = a(i, j);
    }
    p = to_payload(packed);
  }
  bcast(comm, root, p, algo, tag);
  if (comm.rank() != root) {
    const std::vector<double> packed = doubles_from(p);
    if (static_cast<index_t>(packed.size()) != m * n) {
      throw FabricError("bcast_matrix: shape mismatch");
    }
    if (a.storage().size() < static_cast<std::size_t>(a.ld() * n)) a = LocalMatrix(m, n);
    for (index_t j = 0; j < n; ++j) {
      for (index_t i = 0; i < m; ++i) a(i, j) = packed[i + j * m];
    }
  }
}

// ---------------------------------------------------------------------------
// Pivot reduction

namespace {

Payload pack_candidate(const PivotCandidate& c) {
  Payload p(2 * sizeof(double) + c.payload.size() * sizeof(double));
  std::memcpy(p.data(), &c.value, sizeof(double));
  std::memcpy(p.data() + sizeof(double), &c.global_row, sizeof(index_t));
  if (!c.payload.empty()) {
    std::memcpy(p.data() + 2 * sizeof(double), c.payload.data(),
                c.payload.size() * sizeof(double));
  }
  return p;
}

PivotCandidate unpack_candidate(const Payload& p) {
  PivotCandidate c;
  std::memcpy(&c.value, p.data(), sizeof(double));
  std::memcpy(&c.global_row, p.data() + sizeof(double), sizeof(index_t));
  c.payload.resize((p.size() - 2 * sizeof(double)) / sizeof(double));
  if (!c.payload.empty()) {
    std::memcpy(c.payload.data(), p.data() + 2 * sizeof(double),
                c.payload.size() * sizeof(double));
  }
  return c;
}

}  // namespace

PivotCandidate column_maxloc(Comm& column, const PivotCandidate& mine, std::int64_t tag) {
  const int n = column.size();
  if (n == 1) return mine;
  const int me = column.rank();
  PivotCandidate best = mine;

  int d = 1;
  for (; d < n; d <<= 1) {
    if (me % (2 * d) == d) {
      column.send(me - d, tag, pack_candidate(best));
      break;
    }
    if (me % (2 * d) == 0 && me + d < n) {
      PivotCandidate other = unpack_candidate(column.recv(me + d, tag));
      if (beats(other, best)) best = std::move(other);
    }
  }

  // Fan the winner back out along the same tree.
  if (me != 0) best = unpack_candidate(column.recv(me - d, tag + 1));
  for (d >>= 1; d >= 1; d >>= 1) {
    if (me % (2 * d) == 0 && me + d < n) column.send(me + d, tag + 1, pack_candidate(best));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Row swaps

SwapPlan make_swap_plan(index_t first_row, std::span<const index_t> ipiv, index_t n) {
  SwapPlan plan;
  plan.first_row = first_row;
  plan.width = static_cast<int>(ipiv.size());

  std::map<index_t, index_t> content;  // position -> original row, identity if absent
  auto at = [&](index_t pos) {
    auto it = content.find(pos);
    return it == content.end() ? pos : it->second;
  };
  for (int k = 0; k < plan.width; ++k) {
    const index_t pos = first_row + k;
    const index_t piv = ipiv[k];
    if (piv < pos || piv >= n) {
      throw std::out_of_range("pivot " + std::to_string(piv) + " for row " + std::to_string(pos) +
                              " outside [" + std::to_string(pos) + ", " + std::to_string(n) + ")");
    }
    if (piv == pos) continue;
    const index_t a = at(pos);
    const index_t b = at(piv);
    content[pos] = b;
    content[piv] = a;
  }

  plan.top_sources.resize(plan.width);
  for (int k = 0; k < plan.width; ++k) plan.top_sources[k] = at(first_row + k);
  for (const auto& [pos, src] : content) {
    if (pos >= first_row + plan.width && src != pos) plan.down_moves.push_back({src, pos});
  }
  return plan;
}

std::vector<index_t> swap_gather_list(const SwapPlan& plan, const BlockCyclicMap& map, int p) {
  std::vector<index_t> rows;
  if (plan.width == 0) return rows;
  const int diag = map.owner(plan.first_row, Axis::Row);
  for (index_t src : plan.top_sources) {
    if (map.owner(src, Axis::Row) == p) rows.push_back(src);
  }
  if (p == diag) {
    for (const auto& mv : plan.down_moves) rows.push_back(mv.src);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

SwapResult column_rowswap(Comm& column, const BlockCyclicMap& map, const SwapPlan& plan,
                          const LocalMatrix& gathered, std::int64_t tag) {
  SwapResult out;
  const index_t w = gathered.cols();
  const int p = column.rank();
  const int diag = map.owner(plan.first_row, Axis::Row);
  const std::vector<index_t> have = swap_gather_list(plan, map, p);
  if (static_cast<index_t>(have.size()) != gathered.rows()) {
    throw std::invalid_argument("column_rowswap: gathered rows do not match the swap plan");
  }

  auto row_of = [&](index_t g) {
    const auto it = std::lower_bound(have.begin(), have.end(), g);
    return static_cast<index_t>(it - have.begin());
  };
  auto extract = [&](index_t g) {
    const index_t r = row_of(g);
    std::vector<double> v(static_cast<std::size_t>(w));
    for (index_t j = 0; j < w; ++j) v[j] = gathered(r, j);
    return v;
  };
  const bool model_shapes = !gathered.has_storage();

  // Down moves destined to this process row, in plan order.
  std::vector<std::size_t> mine;
  for (std::size_t i = 0; i < plan.down_moves.size(); ++i) {
    if (map.owner(plan.down_moves[i].dst, Axis::Row) == p) mine.push_back(i);
  }
  out.rows = LocalMatrix(static_cast<index_t>(mine.size()), w);
  for (std::size_t i : mine) out.dst_local.push_back(map.to_local(plan.down_moves[i].dst, Axis::Row).local);

  const std::int64_t down_tag = tag + plan.width;

  if (p != diag) {
    for (int k = 0; k < plan.width; ++k) {
      const index_t src = plan.top_sources[k];
      if (map.owner(src, Axis::Row) != p) continue;
      column.send(diag, tag + k, to_payload(model_shapes ? std::vector<double>(w) : extract(src)));
    }
    for (std::size_t r = 0; r < mine.size(); ++r) {
      const auto v = doubles_from(column.recv(diag, down_tag + static_cast<std::int64_t>(mine[r])));
      for (index_t j = 0; j < w; ++j) out.rows(static_cast<index_t>(r), j) = v[j];
    }
    return out;
  }

  out.u = LocalMatrix(plan.width, w);
  for (int k = 0; k < plan.width; ++k) {
    const index_t src = plan.top_sources[k];
    const int owner = map.owner(src, Axis::Row);
    std::vector<double> v =
        owner == p ? (model_shapes ? std::vector<double>(w) : extract(src))
                   : doubles_from(column.recv(owner, tag + k));
    for (index_t j = 0; j < w; ++j) out.u(k, j) = v[j];
  }
  std::size_t local_slot = 0;
  for (std::size_t i = 0; i < plan.down_moves.size(); ++i) {
    const auto& mv = plan.down_moves[i];
    const int owner = map.owner(mv.dst, Axis::Row);
    std::vector<double> v = model_shapes ? std::vector<double>(w) : extract(mv.src);
    if (owner == p) {
      for (index_t j = 0; j < w; ++j) out.rows(static_cast<index_t>(local_slot), j) = v[j];
      ++local_slot;
    } else {
      column.send(owner, down_tag + static_cast<std::int64_t>(i), to_payload(v));
    }
  }
  return out;
}

}  // namespace dhpl
