#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "dhpl/core_plan.hpp"
#include "dhpl/cost_model.hpp"
#include "dhpl/driver.hpp"
#include "dhpl/solve.hpp"
#include "dhpl/timeline.hpp"

using namespace dhpl;

namespace {

int do_run(const cli::CliConfig& c) {
  const RunConfig& cfg = c.run;
  const SolveResult res = run(cfg);
  if (!c.csv.empty()) emit_csv(res.traces, c.csv);

  const bool model = cfg.mode == TimeMode::Model;
  if (!c.quiet) {
    std::printf("N=%lld NB=%d grid=%dx%d split=%s lookahead=%s fraction=%.3f bcast=%s mode=%s\n",
                static_cast<long long>(cfg.n), cfg.nb, cfg.P, cfg.Q, cfg.split ? "on" : "off",
                cfg.lookahead ? "on" : "off", cfg.split_fraction, to_string(cfg.bcast),
                model ? "model" : "real");
    std::printf("time=%.6gs gflops=%.6g\n", res.seconds, res.gflops);
    if (!res.traces.empty()) {
      std::printf("overlap=%.4f transitions=%d first_exposed=%lld", overlap_fraction(res.traces),
                  regime_transitions(res.traces), static_cast<long long>(first_exposed(res.traces)));
      // The predictor needs the model coefficients.
      if (model) std::printf(" predicted_crossover=%lld", static_cast<long long>(predict_crossover(cfg)));
      std::printf("\n");
    }
  }
  if (model) {
    std::printf("MODEL done (no solution computed)\n");
    return cli::kExitOk;
  }
  std::printf("residual=%.6e %s\n", res.residual, res.passed ? "PASSED" : "FAILED");
  return res.passed ? cli::kExitOk : cli::kExitResidual;
}

int do_tune(const cli::CliConfig& c) {
  RunConfig cfg = c.run;
  cfg.split_fraction = tune_split(cfg);
  const index_t crossover = predict_crossover(cfg);
  if (c.quiet) {
    std::printf("%.6f\n", cfg.split_fraction);
  } else {
    std::printf("split_fraction=%.6f predicted_crossover=%lld iterations=%lld\n", cfg.split_fraction,
                static_cast<long long>(crossover), static_cast<long long>(cfg.num_iterations()));
  }
  return cli::kExitOk;
}

int do_bench(const cli::CliConfig& c) {
  const cli::PfactBenchOptions& b = c.bench;
  std::ostringstream rows;
  rows << "M,NB,T,variant,gflops,median_s\n";
  std::cout << rows.str() << std::flush;
  for (int t : b.threads) {
    FactConfig fact = b.fact;
    fact.threads = t;
    const PanelBenchResult r = bench_panel(b.m, b.nb, fact, b.reps, b.seed);
    std::ostringstream row;
    row << b.m << ',' << b.nb << ',' << t << ',' << to_string(fact.variant) << ',' << r.gflops << ','
        << r.median_seconds << '\n';
    std::cout << row.str() << std::flush;
    rows << row.str();
  }
  if (!c.csv.empty()) {
    std::ofstream f(c.csv);
    if (!f) throw std::runtime_error("cannot write " + c.csv);
    f << rows.str();
  }
  return cli::kExitOk;
}

int do_plan(const cli::CliConfig& c) {
  const CorePlan plan = plan_bindings(c.plan.cores, c.plan.P, c.plan.Q);
  std::cout << format_plan_table(plan) << '\n' << format_plan_exports(plan);
  return cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  cli::CliConfig cfg;
  try {
    cfg = cli::parse_and_validate(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const cli::HelpRequested& h) {
    std::cout << h.text;
    return cli::kExitOk;
  } catch (const cli::ConfigError& e) {
    std::cerr << "dhpl: " << e.what() << '\n';
    return cli::kExitConfig;
  }

  try {
    switch (cfg.command) {
      case cli::Command::Run:
        return do_run(cfg);
      case cli::Command::Tune:
        return do_tune(cfg);
      case cli::Command::PfactBench:
        return do_bench(cfg);
      case cli::Command::Plan:
        return do_plan(cfg);
    }
  } catch (const SingularMatrixError& e) {
    std::cerr << "dhpl: singular matrix: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "dhpl: " << e.what() << '\n';
  }
  return cli::kExitRuntime;
}
