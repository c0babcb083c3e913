#include "dhpl/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dhpl {

void CostModel::validate() const {
  const double all[] = {c_gemm, c_trsm, c_fact, c_xfer, c_bcast, c_swap, latency_s};
  for (double c : all) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("cost coefficients must be finite and >= 0");
    }
  }
}

namespace {
// Real mode holds the whole augmented system in memory.
constexpr double kRealModeByteLimit = 8.0 * 1024 * 1024 * 1024;
}  // namespace

void RunConfig::validate() const {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  if (nb < 1) throw std::invalid_argument("NB must be >= 1");
  if (nb > 2048) throw std::invalid_argument("NB must be <= 2048");
  if (nb > n) throw std::invalid_argument("NB must be <= N");
  if (P < 1 || Q < 1) throw std::invalid_argument("P and Q must be >= 1");
  if (!(split_fraction >= 0.0 && split_fraction <= 1.0)) {
    throw std::invalid_argument("split fraction must be in [0, 1]");
  }
  fact.validate(nb);
  if (timeout.count() <= 0) throw std::invalid_argument("timeout must be positive");
  if (mode == TimeMode::Model) cost.validate();
  if (net.latency_s < 0 || net.inv_bandwidth_s_per_byte < 0) {
    throw std::invalid_argument("network delay parameters must be >= 0");
  }
  if (mode == TimeMode::Real &&
      8.0 * static_cast<double>(n) * static_cast<double>(n + 1) > kRealModeByteLimit) {
    throw std::invalid_argument("N = " + std::to_string(n) +
                                " does not fit in memory for a real run; use model mode");
  }
}

index_t RunConfig::left_columns(int q) const {
  const index_t ncols = map().local_cols(q);
  const double blocks = (1.0 - split_fraction) * static_cast<double>(ncols) / nb;
  const index_t n1 = static_cast<index_t>(std::llround(blocks)) * nb;
  return std::clamp<index_t>(n1, 0, ncols);
}

RunConfig single_node_preset() {
  RunConfig cfg;
  cfg.n = 256000;
  cfg.nb = 512;
  cfg.P = 4;
  cfg.Q = 2;
  cfg.split_fraction = 0.5;
  return cfg;
}

}  // namespace dhpl
