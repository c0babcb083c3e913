#include "dhpl/core_plan.hpp"

#include <sstream>
#include <stdexcept>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace dhpl {

CorePlan plan_bindings(int cores, int P, int Q) {
  if (P < 1 || Q < 1) throw std::invalid_argument("P and Q must be >= 1");
  if (cores < P * Q) {
    throw std::invalid_argument("C < P*Q: " + std::to_string(cores) + " cores cannot give " +
                                std::to_string(P * Q) + " ranks distinct root cores");
  }
  CorePlan plan;
  plan.cores = cores;
  plan.P = P;
  plan.Q = Q;
  plan.pool = cores - P * Q;
  plan.slice = plan.pool / P;
  plan.threads = 1 + plan.slice;
  plan.idle_remainder = plan.pool % P;
  plan.bindings.resize(static_cast<std::size_t>(P * Q));
  for (int q = 0; q < Q; ++q) {
    for (int p = 0; p < P; ++p) {
      const int rank = p + q * P;
      auto& b = plan.bindings[rank];
      b.rank = rank;
      b.p = p;
      b.q = q;
      b.root_core = rank;
      const int first = P * Q + p * plan.slice;
      for (int c = 0; c < plan.slice; ++c) b.pool_cores.push_back(first + c);
    }
  }
  return plan;
}

std::string format_plan_table(const CorePlan& plan) {
  std::ostringstream os;
  os << "cores=" << plan.cores << " grid=" << plan.P << "x" << plan.Q << " pool=" << plan.pool
     << " slice=" << plan.slice << " T=" << plan.threads << " idle_remainder=" << plan.idle_remainder
     << "\n";
  os << "fact_cores=" << plan.fact_cores() << " naive_fact_cores=" << plan.naive_fact_cores()
     << " naive_idle=" << plan.naive_idle_cores() << "\n";
  os << "rank  p  q  root  pool\n";
  for (const auto& b : plan.bindings) {
    os << b.rank << "  " << b.p << "  " << b.q << "  " << b.root_core << "  ";
    if (b.pool_cores.empty()) {
      os << "-";
    } else {
      os << b.pool_cores.front() << "-" << b.pool_cores.back();
    }
    os << "\n";
  }
  return os.str();
}

std::string format_plan_exports(const CorePlan& plan) {
  std::ostringstream os;
  for (const auto& b : plan.bindings) {
    os << "export DHPL_RANK" << b.rank << "_BIND=\"OMP_NUM_THREADS=" << plan.threads
       << " OMP_PLACES={" << b.root_core << "}";
    for (int c : b.pool_cores) os << ",{" << c << "}";
    os << "\"\n";
  }
  return os.str();
}

bool pin_current_thread(int core) {
#if defined(__linux__)
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core, &set);
  return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
#else
  (void)core;
  return false;
#endif
}

}  // namespace dhpl
