#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "siscale/cli_run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rate-distortion bounds and nested-binning simulation for "
               "two-stage source coding with decoder side information"};
  app.require_subcommand(1);

  siscale::cli::RunOptions opts;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int grid = 0, restarts = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_flag("--deterministic", opts.deterministic,
                  "suppress timestamp headers in CSV outputs");
    sub->add_option("--grid", grid, "optimizer simplex grid resolution");
    sub->add_option("--restarts", restarts, "optimizer restarts");
  };
  for (const char* name : {"region", "dsbs", "gaussian", "rateloss",
                           "simulate"})
    add_common(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);
  opts.subcommand = app.get_subcommands().front()->get_name();
  if (seed_set) opts.seed = seed;
  if (grid > 0) opts.grid = grid;
  if (restarts > 0) opts.restarts = restarts;
  return siscale::cli::run(opts, std::cout, std::cerr);
}
