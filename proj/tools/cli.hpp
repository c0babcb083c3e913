#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "dhpl/config.hpp"

namespace dhpl::cli {

enum class Command { Run, PfactBench, Plan, Tune };

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitResidual = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct PfactBenchOptions {
  index_t m = 65536;
  int nb = 512;
  std::vector<int> threads{1, 2, 4, 8};
  int reps = 5;
  std::uint64_t seed = 1;
  FactConfig fact;  // threads field overwritten per sweep point
};

struct PlanOptions {
  int cores = 0;
  int P = 1;
  int Q = 1;
};

struct CliConfig {
  Command command = Command::Run;
  RunConfig run;  // run and tune
  PfactBenchOptions bench;
  PlanOptions plan;
  std::string csv;  // empty: no CSV output
  bool quiet = false;
};

/// Bad flags or an invalid configuration; `what()` is the user-facing message.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// --help or --version was given; `text` should go to stdout with exit 0.
struct HelpRequested {
  std::string text;
};

/// Parses `args` (without the program name) and validates the result.
/// Throws ConfigError or HelpRequested.
CliConfig parse_and_validate(const std::vector<std::string>& args);

}  // namespace dhpl::cli
