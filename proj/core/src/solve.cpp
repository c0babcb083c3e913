#include "dhpl/solve.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "dhpl/clock.hpp"
#include "dhpl/generate.hpp"

namespace dhpl {

std::vector<double> back_substitute(Comm& world, const BlockCyclicMap& map, int p, int q,
                                    const LocalMatrix& ab, std::int64_t tag) {
  const index_t n = map.n();
  const index_t nb = map.nb();
  const ProcessGrid& grid = map.grid();
  const int me = grid.rank_of(p, q);
  const int qb = map.owner(n, Axis::Column);
  const index_t b_local = q == qb ? map.to_local(n, Axis::Column).local : -1;
  const index_t u_end = map.local_begin(n, Axis::Column, q);

  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (index_t k = map.num_blocks() - 1; k >= 0; --k) {
    const index_t g0 = k * nb;
    const index_t kb = std::min(nb, n - g0);
    const int pk = map.owner(g0, Axis::Row);
    const int qk = map.owner(g0, Axis::Column);
    const int diag = grid.rank_of(pk, qk);
    const std::int64_t t_part = tag + 2 * k;
    const std::int64_t t_x = tag + 2 * k + 1;

    if (p == pk) {
      const index_t rl = map.to_local(g0, Axis::Row).local;
      const index_t c_begin = map.local_begin(std::min(g0 + nb, n), Axis::Column, q);
      // [partial sums | y], y only meaningful on the rhs column.
      std::vector<double> mine(static_cast<std::size_t>(2 * kb), 0.0);
      for (index_t i = 0; i < kb; ++i) {
        double s = 0.0;
        for (index_t c = c_begin; c < u_end; ++c) {
          s += ab(rl + i, c) * x[map.to_global(q, c, Axis::Column)];
        }
        mine[i] = s;
        if (b_local >= 0) mine[kb + i] = ab(rl + i, b_local);
      }

      if (me != diag) {
        world.send(diag, t_part, to_payload(mine));
      } else {
        std::vector<double> acc(static_cast<std::size_t>(kb), 0.0);
        std::vector<std::vector<double>> parts(static_cast<std::size_t>(grid.Q));
        for (int qq = 0; qq < grid.Q; ++qq) {
          parts[qq] = qq == q ? mine : doubles_from(world.recv(grid.rank_of(pk, qq), t_part));
        }
        for (index_t i = 0; i < kb; ++i) acc[i] = parts[qb][kb + i];
        for (int qq = 0; qq < grid.Q; ++qq) {
          for (index_t i = 0; i < kb; ++i) acc[i] -= parts[qq][i];
        }
        const index_t cl = map.to_local(g0, Axis::Column).local;
        for (index_t i = kb - 1; i >= 0; --i) {
          double s = acc[i];
          for (index_t j = i + 1; j < kb; ++j) s -= ab(rl + i, cl + j) * x[g0 + j];
          const double d = ab(rl + i, cl + i);
          if (d == 0.0) {
            throw SingularMatrixError(g0 + i, "zero diagonal in U at column " + std::to_string(g0 + i));
          }
          x[g0 + i] = s / d;
        }
      }
    }

    if (me == diag) {
      const Payload block = to_payload(std::span<const double>(x.data() + g0, kb));
      for (int r = 0; r < grid.size(); ++r) {
        if (r != me) world.send(r, t_x, block);
      }
    } else {
      const std::vector<double> block = doubles_from(world.recv(diag, t_x));
      std::copy(block.begin(), block.end(), x.begin() + g0);
    }
  }
  return x;
}

std::vector<double> back_substitute(const LocalMatrix& uy, index_t nb, ProcessGrid grid) {
  const index_t n = uy.rows();
  if (uy.cols() != n + 1) throw std::invalid_argument("back_substitute expects an N x (N+1) matrix");
  const BlockCyclicMap map(n, nb, grid);
  World world(grid);
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(grid.size()));
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> workers;
  for (int r = 0; r < grid.size(); ++r) {
    workers.emplace_back([&, r] {
      try {
        const int p = grid.row_of(r);
        const int q = grid.col_of(r);
        LocalMatrix local(map.local_rows(p), map.local_cols(q));
        for (index_t j = 0; j < local.cols(); ++j) {
          const index_t gj = map.to_global(q, j, Axis::Column);
          for (index_t i = 0; i < local.rows(); ++i) local(i, j) = uy(map.to_global(p, i, Axis::Row), gj);
        }
        Clock clock;
        Comm comm = make_world_comm(world, r, clock);
        xs[r] = back_substitute(comm, map, p, q, local);
      } catch (...) {
        {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
        world.shutdown();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (err) std::rethrow_exception(err);
  return xs[0];
}

namespace {

template <typename Entry>
double residual_impl(index_t n, std::span<const double> x, Entry entry) {
  if (static_cast<index_t>(x.size()) != n) {
    throw std::invalid_argument("solution length does not match N");
  }
  double r_norm = 0.0;
  double a_norm = 0.0;
  double b_norm = 0.0;
  double x_norm = 0.0;
  for (double v : x) x_norm = std::max(x_norm, std::abs(v));
  for (index_t i = 0; i < n; ++i) {
    double r = 0.0;
    double row = 0.0;
    for (index_t j = 0; j < n; ++j) {
      const double a = entry(i, j);
      r += a * x[j];
      row += std::abs(a);
    }
    const double b = entry(i, n);
    r -= b;
    r_norm = std::max(r_norm, std::abs(r));
    a_norm = std::max(a_norm, row);
    b_norm = std::max(b_norm, std::abs(b));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double denom = eps * (a_norm * x_norm + b_norm) * static_cast<double>(n);
  if (denom == 0.0) return r_norm == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return r_norm / denom;
}

}  // namespace

double scaled_residual(const LocalMatrix& ab, std::span<const double> x) {
  if (ab.cols() != ab.rows() + 1) throw std::invalid_argument("expected an N x (N+1) system");
  return residual_impl(ab.rows(), x, [&](index_t i, index_t j) { return ab(i, j); });
}

double scaled_residual(std::uint64_t seed, index_t n, std::span<const double> x) {
  return residual_impl(n, x, [&](index_t i, index_t j) { return entry_value(seed, i, j, n); });
}

}  // namespace dhpl
