#include <CLI11.hpp>

#include <cstdlib>
#include <string>

#include "stockade/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stockade - Byzantine-tolerant all-reduce SGD simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, hash_mode, run_dir;
  std::uint64_t seed = 0, reps = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    cmd->add_option("--seed", seed, "base seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--reps", reps, "repetition count override");
    cmd->add_option("--hash-mode", hash_mode, "crypto | fast-sim")
        ->check(CLI::IsMember({"crypto", "fast-sim"}));
  };

  CLI::App* run = app.add_subcommand("run", "execute a single experiment");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "expand the [sweep] grid and run each point");
  add_common(sweep);
  CLI::App* verify =
      app.add_subcommand("verify", "replay a run directory and re-check every ban verdict");
  verify->add_option("dir", run_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  stockade::RunOverrides overrides;
  overrides.out_dir = out_dir;
  overrides.hash_mode = hash_mode;
  overrides.seed = seed;
  overrides.seed_set = seed_set;
  overrides.reps = reps;

  if (run->parsed()) return stockade::cli_run(config_path, overrides);
  if (sweep->parsed()) {
    int workers = 2;
    if (const char* env = std::getenv("STOCKADE_WORKERS")) workers = std::atoi(env);
    return stockade::cli_sweep(config_path, overrides, workers);
  }
  return stockade::cli_verify(run_dir);
}
