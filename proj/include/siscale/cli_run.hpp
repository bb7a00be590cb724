#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

// Batch front-end: parses one experiment config, dispatches to the bound,
// closed-form, rate-loss, or simulator modules, and writes CSV/JSON
// artifacts. One config file describes one experiment; sweeps are lists
// inside the config.
namespace siscale::cli {

struct RunOptions {
  std::string subcommand;   // region | dsbs | gaussian | rateloss | simulate
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<int> grid;
  std::optional<int> restarts;
};

// Returns the process exit status: 0 on success, 2 for config parse errors,
// 3 for domain errors (infeasible or invalid instances), 1 otherwise. On
// failure a single-line machine-readable JSON error object goes to `err`.
int run(const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace siscale::cli
