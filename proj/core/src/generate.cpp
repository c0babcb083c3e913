#include "dhpl/generate.hpp"

namespace dhpl {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double entry_value(std::uint64_t seed, index_t i, index_t j, index_t n) {
  // Row stride N+1 keeps the right-hand side column distinct from row i+1.
  const auto counter = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n + 1) +
                       static_cast<std::uint64_t>(j);
  const std::uint64_t bits = mix64(mix64(seed) ^ counter);
  return static_cast<double>(bits >> 11) * 0x1.0p-53 - 0.5;
}

LocalMatrix generate_local(std::uint64_t seed, const BlockCyclicMap& map, int p, int q) {
  const index_t m = map.local_rows(p);
  const index_t n = map.local_cols(q);
  LocalMatrix a(m, n);
  for (index_t lj = 0; lj < n; ++lj) {
    const index_t gj = map.to_global(q, lj, Axis::Column);
    for (index_t li = 0; li < m; ++li) {
      a(li, lj) = entry_value(seed, map.to_global(p, li, Axis::Row), gj, map.n());
    }
  }
  return a;
}

LocalMatrix generate_global(std::uint64_t seed, index_t n) {
  LocalMatrix a(n, n + 1);
  for (index_t j = 0; j <= n; ++j) {
    for (index_t i = 0; i < n; ++i) a(i, j) = entry_value(seed, i, j, n);
  }
  return a;
}

}  // namespace dhpl
