#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dhpl/grid.hpp"

namespace dhpl {

enum class Regime { Hidden, Exposed };

const char* to_string(Regime r);

/// Fraction of t_iter the engine may sit idle while the iteration still
/// counts as hidden.
inline constexpr double kHiddenQuantum = 0.05;

/// Per-iteration timers recorded on the rank factoring the next panel.
/// Phase timers are wall spans measured independently, so t_fact + t_comm +
/// t_xfer may exceed t_iter when phases overlap.
struct IterationTrace {
  index_t j = 0;
  double t_iter = 0.0;
  double t_engine = 0.0;
  double t_fact = 0.0;
  double t_comm = 0.0;
  double t_xfer = 0.0;
  Regime regime = Regime::Hidden;

  friend bool operator==(const IterationTrace&, const IterationTrace&) = default;
};

Regime classify(double t_iter, double t_engine, double quantum = kHiddenQuantum);

/// Header: j,t_iter,t_engine,t_fact,t_comm,t_xfer,regime
void write_csv(std::ostream& os, const std::vector<IterationTrace>& traces);
/// Throws std::runtime_error if the file cannot be written.
void emit_csv(const std::vector<IterationTrace>& traces, const std::string& path);
/// Throws std::runtime_error on malformed input.
std::vector<IterationTrace> parse_csv(std::istream& is);

/// Share of total time spent in hidden iterations.
double overlap_fraction(const std::vector<IterationTrace>& traces);

/// Number of hidden -> exposed or exposed -> hidden changes.
int regime_transitions(const std::vector<IterationTrace>& traces);
/// Index of the first exposed iteration, or traces.size() if none.
index_t first_exposed(const std::vector<IterationTrace>& traces);

}  // namespace dhpl
