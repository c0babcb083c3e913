#include "cli.hpp"

#include <sstream>

#include <CLI11.hpp>

#include "dhpl/core_plan.hpp"
#include "dhpl/cost_model.hpp"

namespace dhpl::cli {

namespace {

struct FactFlags {
  std::string variant = "recursive";
  int ndiv = 2;
  int base_nb = 16;
  CLI::Option* base_nb_opt = nullptr;
};

void add_fact_flags(CLI::App* sub, FactFlags& f) {
  sub->add_option("--variant", f.variant, "Panel variant: right, left, crout, recursive")
      ->capture_default_str();
  sub->add_option("--ndiv", f.ndiv, "Subpanels per recursion level")->capture_default_str();
  f.base_nb_opt =
      sub->add_option("--base-nb", f.base_nb, "Recursion base width (default min(16, NB))");
}

FactConfig make_fact(const FactFlags& f, int nb) {
  FactConfig fact;
  try {
    fact.variant = fact_variant_from_string(f.variant);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  fact.ndiv = f.ndiv;
  // 16 is the usual base width, but it may not exceed NB.
  fact.base_nb = f.base_nb_opt->count() > 0 ? f.base_nb : std::min(16, std::max(nb, 1));
  return fact;
}

struct RunFlags {
  std::string preset;
  long long n = 0;
  int nb = 512;
  int P = 1;
  int Q = 1;
  double split_frac = 0.5;
  std::uint64_t seed = 1;
  FactFlags fact;
  int threads = 1;
  std::string bcast = "1ring";
  std::string mode = "real";
  bool lookahead = true;
  bool split = true;
  double net_latency = 0.0;
  double net_bw = 0.0;
  CostModel cost;
  double timeout_s = 300.0;
  std::vector<CLI::Option*> shape_opts;
  std::vector<CLI::Option*> cost_opts;
};

void add_run_flags(CLI::App* sub, RunFlags& r) {
  sub->add_option("--preset", r.preset, "Start from: reference, balanced or single-node");
  r.shape_opts = {
      sub->add_option("--n", r.n, "Matrix order N"),
      sub->add_option("--nb", r.nb, "Block size NB")->capture_default_str(),
      sub->add_option("--p", r.P, "Process rows P")->capture_default_str(),
      sub->add_option("--q", r.Q, "Process columns Q")->capture_default_str(),
      sub->add_option("--split-frac", r.split_frac, "Right-section share of local columns")
          ->capture_default_str(),
      sub->add_option("--seed", r.seed, "Matrix seed")->capture_default_str(),
      sub->add_option("--bcast", r.bcast, "Panel broadcast: 1ring or tree")->capture_default_str(),
      sub->add_option("--mode", r.mode, "Time mode: real or model")->capture_default_str(),
      sub->add_option("--lookahead", r.lookahead, "Factor the next panel early (true/false)")
          ->capture_default_str(),
      sub->add_option("--split", r.split, "Split update (true/false)")->capture_default_str(),
  };
  add_fact_flags(sub, r.fact);
  sub->add_option("--threads", r.threads, "Panel factorization team size")->capture_default_str();
  sub->add_option("--net-latency", r.net_latency, "Real mode message latency [s]");
  sub->add_option("--net-bw", r.net_bw, "Real mode bandwidth [bytes/s], 0 = unlimited");
  r.cost_opts = {
      sub->add_option("--c-gemm", r.cost.c_gemm, "Model seconds per GEMM flop"),
      sub->add_option("--c-trsm", r.cost.c_trsm, "Model seconds per TRSM flop"),
      sub->add_option("--c-fact", r.cost.c_fact, "Model seconds per FACT flop"),
      sub->add_option("--c-xfer", r.cost.c_xfer, "Model seconds per host transfer byte"),
      sub->add_option("--c-bcast", r.cost.c_bcast, "Model seconds per broadcast byte"),
      sub->add_option("--c-swap", r.cost.c_swap, "Model seconds per row-swap byte"),
      sub->add_option("--latency", r.cost.latency_s, "Model seconds per message"),
  };
  sub->add_option("--timeout", r.timeout_s, "Abort if a rank blocks this long [s]")
      ->capture_default_str();
}

RunConfig make_run(const RunFlags& r, bool force_model) {
  RunConfig cfg;
  if (r.preset == "reference") {
    cfg = reference_model_config();
  } else if (r.preset == "balanced") {
    cfg = balanced_model_config();
  } else if (r.preset == "single-node") {
    cfg = single_node_preset();
  } else if (!r.preset.empty()) {
    throw ConfigError("unknown preset '" + r.preset + "' (expected reference, balanced or single-node)");
  }
  // Explicit flags override the preset; without a preset every flag applies.
  auto given = [&](std::size_t i) { return r.preset.empty() || r.shape_opts[i]->count() > 0; };
  if (given(0)) cfg.n = r.n;
  if (given(1)) cfg.nb = r.nb;
  if (given(2)) cfg.P = r.P;
  if (given(3)) cfg.Q = r.Q;
  if (given(4)) cfg.split_fraction = r.split_frac;
  if (given(5)) cfg.seed = r.seed;
  try {
    if (given(6)) cfg.bcast = bcast_algo_from_string(r.bcast);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (given(7)) {
    if (r.mode == "real") {
      cfg.mode = TimeMode::Real;
    } else if (r.mode == "model") {
      cfg.mode = TimeMode::Model;
    } else {
      throw ConfigError("unknown mode '" + r.mode + "' (expected real or model)");
    }
  }
  if (given(8)) cfg.lookahead = r.lookahead;
  if (given(9)) cfg.split = r.split;
  if (force_model) cfg.mode = TimeMode::Model;
  if (r.preset.empty() && r.shape_opts[0]->count() == 0) throw ConfigError("--n is required");

  cfg.fact = make_fact(r.fact, cfg.nb);
  cfg.fact.threads = r.threads;
  if (r.net_latency > 0.0 || r.net_bw > 0.0) {
    if (r.net_bw < 0.0) throw ConfigError("--net-bw must be >= 0");
    cfg.net = {r.net_latency, r.net_bw > 0.0 ? 1.0 / r.net_bw : 0.0, true};
  }
  CostModel& c = cfg.cost;
  double* fields[] = {&c.c_gemm, &c.c_trsm, &c.c_fact, &c.c_xfer, &c.c_bcast, &c.c_swap, &c.latency_s};
  const double* given_fields[] = {&r.cost.c_gemm, &r.cost.c_trsm,  &r.cost.c_fact,   &r.cost.c_xfer,
                                  &r.cost.c_bcast, &r.cost.c_swap, &r.cost.latency_s};
  for (std::size_t i = 0; i < r.cost_opts.size(); ++i) {
    if (r.cost_opts[i]->count() > 0) *fields[i] = *given_fields[i];
  }
  if (!(r.timeout_s > 0.0)) throw ConfigError("--timeout must be positive");
  cfg.timeout = std::chrono::milliseconds(static_cast<long long>(r.timeout_s * 1000.0));
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

}  // namespace

CliConfig parse_and_validate(const std::vector<std::string>& args) {
  CLI::App app{"Desk-scale distributed HPL", "dhpl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dhpl 0.1.0");

  CliConfig out;
  RunFlags run;
  RunFlags tune;
  FactFlags bench_fact;
  std::string threads_list = "1,2,4,8";

  CLI::App* run_cmd = app.add_subcommand("run", "Factor and solve a generated system");
  add_run_flags(run_cmd, run);
  run_cmd->add_option("--csv", out.csv, "Write per-iteration traces to PATH");
  run_cmd->add_flag("--quiet", out.quiet, "Only print the final status line");

  CLI::App* tune_cmd = app.add_subcommand("tune", "Pick the split fraction from the cost model");
  add_run_flags(tune_cmd, tune);
  tune_cmd->add_flag("--quiet", out.quiet, "Only print the fraction");

  CLI::App* bench_cmd = app.add_subcommand("pfact-bench", "Time panel factorization vs team size");
  bench_cmd->add_option("--m", out.bench.m, "Panel rows M")->capture_default_str();
  bench_cmd->add_option("--nb", out.bench.nb, "Panel width NB")->capture_default_str();
  bench_cmd->add_option("--threads", threads_list, "Comma-separated team sizes")->capture_default_str();
  bench_cmd->add_option("--reps", out.bench.reps, "Repetitions per point")->capture_default_str();
  bench_cmd->add_option("--seed", out.bench.seed, "Panel seed")->capture_default_str();
  add_fact_flags(bench_cmd, bench_fact);
  bench_cmd->add_option("--csv", out.csv, "Also write the rows to PATH");

  CLI::App* plan_cmd = app.add_subcommand("plan", "Core bindings for a P x Q grid on C cores");
  plan_cmd->add_option("--cores", out.plan.cores, "Total cores C")->required();
  plan_cmd->add_option("--p", out.plan.P, "Process rows P")->capture_default_str();
  plan_cmd->add_option("--q", out.plan.Q, "Process columns Q")->capture_default_str();

  // CLI11 wants argv with a program name.
  std::vector<const char*> argv{"dhpl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    throw HelpRequested{os.str()};
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  if (run_cmd->parsed()) {
    out.command = Command::Run;
    out.run = make_run(run, false);
  } else if (tune_cmd->parsed()) {
    out.command = Command::Tune;
    out.run = make_run(tune, true);
  } else if (bench_cmd->parsed()) {
    out.command = Command::PfactBench;
    PfactBenchOptions& b = out.bench;
    if (b.m < 1) throw ConfigError("M must be >= 1");
    if (b.nb < 1) throw ConfigError("NB must be >= 1");
    if (b.m < b.nb) throw ConfigError("M must be >= NB");
    if (b.reps < 1) throw ConfigError("reps must be >= 1");
    b.threads.clear();
    std::istringstream is(threads_list);
    std::string item;
    while (std::getline(is, item, ',')) {
      try {
        std::size_t used = 0;
        const int t = std::stoi(item, &used);
        if (used != item.size() || t < 1) throw std::invalid_argument(item);
        b.threads.push_back(t);
      } catch (const std::exception&) {
        throw ConfigError("--threads expects positive integers, got '" + item + "'");
      }
    }
    if (b.threads.empty()) throw ConfigError("--threads needs at least one team size");
    b.fact = make_fact(bench_fact, b.nb);
    try {
      b.fact.validate(b.nb);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    out.command = Command::Plan;
    try {
      plan_bindings(out.plan.cores, out.plan.P, out.plan.Q);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

}  // namespace dhpl::cli
