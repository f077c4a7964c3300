#pragma once

#include <string>

#include "stockade/config.hpp"

namespace stockade {

// CLI exit codes.
constexpr int kExitOk = 0;
constexpr int kExitDivergence = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitAllBanned = 3;

struct RunOverrides {
  std::string out_dir;
  std::string hash_mode;  // "", "crypto", "fast-sim"
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t reps = 0;  // 0 = keep config value
};

/// Executes one run and writes metrics.csv, events.jsonl, snapshots.jsonl and
/// summary.json under `dir`. Partial outputs are flushed even when the run
/// aborts with every peer banned.
RunResult execute_run(const ExperimentConfig& cfg, const std::string& dir);

/// Subcommand entry points; each returns the process exit code.
int cli_run(const std::string& config_path, const RunOverrides& overrides);
int cli_sweep(const std::string& config_path, const RunOverrides& overrides, int workers);
int cli_verify(const std::string& run_dir);

/// Replays a finished run directory from the config echoed in summary.json
/// and compares every trace line, the metrics bytes and the ban ledger.
/// Returns a human-readable report; ok is false on any divergence.
struct VerifyReport {
  bool ok = false;
  std::string detail;
};
VerifyReport verify_run_dir(const std::string& run_dir);

}  // namespace stockade
