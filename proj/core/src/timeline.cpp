#include "dhpl/timeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace dhpl {

const char* to_string(Regime r) { return r == Regime::Hidden ? "hidden" : "exposed"; }

Regime classify(double t_iter, double t_engine, double quantum) {
  return t_iter - t_engine <= quantum * t_iter ? Regime::Hidden : Regime::Exposed;
}

void write_csv(std::ostream& os, const std::vector<IterationTrace>& traces) {
  os << "j,t_iter,t_engine,t_fact,t_comm,t_xfer,regime\n";
  // 17 significant digits round-trip doubles exactly.
  os << std::setprecision(17);
  for (const auto& t : traces) {
    os << t.j << ',' << t.t_iter << ',' << t.t_engine << ',' << t.t_fact << ',' << t.t_comm << ','
       << t.t_xfer << ',' << to_string(t.regime) << '\n';
  }
}

void emit_csv(const std::vector<IterationTrace>& traces, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(out, traces);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<IterationTrace> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "j,t_iter,t_engine,t_fact,t_comm,t_xfer,regime") {
    throw std::runtime_error("trace CSV: missing or unexpected header");
  }
  std::vector<IterationTrace> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::runtime_error("trace CSV line " + std::to_string(lineno) + ": expected 7 fields");
    IterationTrace t;
    try {
      std::size_t pos = 0;
      t.j = std::stoll(f[0], &pos);
      if (pos != f[0].size()) throw std::invalid_argument(f[0]);
      double* dst[] = {&t.t_iter, &t.t_engine, &t.t_fact, &t.t_comm, &t.t_xfer};
      for (int i = 0; i < 5; ++i) {
        *dst[i] = std::stod(f[i + 1], &pos);
        if (pos != f[i + 1].size()) throw std::invalid_argument(f[i + 1]);
      }
    } catch (const std::logic_error&) {
      throw std::runtime_error("trace CSV line " + std::to_string(lineno) + ": bad number");
    }
    if (f[6] == "hidden") {
      t.regime = Regime::Hidden;
    } else if (f[6] == "exposed") {
      t.regime = Regime::Exposed;
    } else {
      throw std::runtime_error("trace CSV line " + std::to_string(lineno) + ": bad regime '" + f[6] + "'");
    }
    out.push_back(t);
  }
  return out;
}

double overlap_fraction(const std::vector<IterationTrace>& traces) {
  double hidden = 0.0;
  double total = 0.0;
  for (const auto& t : traces) {
    total += t.t_iter;
    if (t.regime == Regime::Hidden) hidden += t.t_iter;
  }
  return total > 0.0 ? hidden / total : 0.0;
}

int regime_transitions(const std::vector<IterationTrace>& traces) {
  int n = 0;
  for (std::size_t i = 1; i < traces.size(); ++i) n += traces[i].regime != traces[i - 1].regime;
  return n;
}

index_t first_exposed(const std::vector<IterationTrace>& traces) {
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].regime == Regime::Exposed) return static_cast<index_t>(i);
  }
  return static_cast<index_t>(traces.size());
}

}  // namespace dhpl
