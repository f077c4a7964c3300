#include "stockade/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace stockade {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json summary_json(const ExperimentConfig& cfg, const RunResult& result,
                  const TraceSink& trace) {
  json bans = json::array();
  std::vector<double> ban_steps;
  for (const auto& b : result.bans) {
    bans.push_back({{"peer", b.peer}, {"step", b.step}, {"cause", ban_cause_name(b.cause)}});
    ban_steps.push_back(static_cast<double>(b.step));
  }
  std::sort(ban_steps.begin(), ban_steps.end());
  json quantiles = json::object();
  if (!ban_steps.empty()) {
    const auto q = [&](double f) {
      const std::size_t i =
          std::min(ban_steps.size() - 1,
                   static_cast<std::size_t>(f * static_cast<double>(ban_steps.size() - 1)));
      return ban_steps[i];
    };
    quantiles = {{"p25", q(0.25)}, {"p50", q(0.5)}, {"p75", q(0.75)}, {"max", ban_steps.back()}};
  }
  json cfg_echo = json::object();
  for (const auto& [k, v] : cfg.resolved) cfg_echo[k] = v;
  std::uint64_t triggers = 0;
  for (const auto& m : result.metrics) triggers += m.check_averaging_triggers;
  return json{{"config", cfg_echo},
              {"steps_run", result.steps_run},
              {"aborted_all_banned", result.aborted_all_banned},
              {"final_loss", result.metrics.empty() ? 0.0 : result.metrics.back().loss},
              {"bans", bans},
              {"ban_step_quantiles", quantiles},
              {"check_averaging_triggers", triggers},
              {"ledgers_agree", result.ledgers_agree()},
              {"ledger_digest", hex(result.ledger_digest)},
              {"trace_digest", hex(trace.trace_digest())}};
}

}  // namespace

RunResult execute_run(const ExperimentConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  TraceSink trace(cfg.swarm.hash_mode);
  RunResult result;
  {
    Swarm swarm(cfg.swarm, &trace);
    result = swarm.run();
  }
  write_file(fs::path(dir) / "metrics.csv", metrics_to_csv(result.metrics));
  {
    std::ostringstream os;
    for (const auto& line : trace.lines()) os << line << "\n";
    os << trace.final_line() << "\n";
    write_file(fs::path(dir) / "events.jsonl", os.str());
  }
  if (!result.snapshots.empty()) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [step, x] : result.snapshots) {
      os << "{\"step\":" << step << ",\"x\":[";
      for (std::size_t c = 0; c < x.size(); ++c) os << (c ? "," : "") << x[c];
      os << "]}\n";
    }
    write_file(fs::path(dir) / "snapshots.jsonl", os.str());
  }
  write_file(fs::path(dir) / "summary.json", summary_json(cfg, result, trace).dump(2) + "\n");
  return result;
}

namespace {

ExperimentConfig load_with_overrides(const std::string& config_path,
                                     const RunOverrides& overrides) {
  KvMap map = parse_config_text(read_file(config_path));
  if (!overrides.hash_mode.empty()) map["swarm.hash_mode"] = overrides.hash_mode;
  if (overrides.seed_set) map["swarm.seed"] = std::to_string(overrides.seed);
  if (overrides.reps > 0) map["output.repetitions"] = std::to_string(overrides.reps);
  ExperimentConfig cfg = ExperimentConfig::from_map(std::move(map));
  if (!overrides.out_dir.empty()) cfg.out_dir = overrides.out_dir;
  return cfg;
}

int run_with_reps(ExperimentConfig cfg) {
  if (cfg.repetitions <= 1) {
    const RunResult r = execute_run(cfg, cfg.out_dir);
    return r.aborted_all_banned ? kExitAllBanned : kExitOk;
  }
  // Per-seed runs plus an aggregate band file (mean / min / max per step).
  std::vector<std::vector<StepMetrics>> all;
  int code = kExitOk;
  for (std::uint64_t rep = 0; rep < cfg.repetitions; ++rep) {
    ExperimentConfig rep_cfg = cfg;
    rep_cfg.swarm.seed = cfg.swarm.seed + rep;
    rep_cfg.resolved["swarm.seed"] = std::to_string(rep_cfg.swarm.seed);
    const std::string dir = cfg.out_dir + "/seed_" + std::to_string(rep_cfg.swarm.seed);
    const RunResult r = execute_run(rep_cfg, dir);
    if (r.aborted_all_banned) code = kExitAllBanned;
    all.push_back(r.metrics);
  }
  std::size_t steps = 0;
  for (const auto& m : all) steps = std::max(steps, m.size());
  std::ostringstream os;
  os.precision(17);
  os << "step,loss_mean,loss_min,loss_max\n";
  for (std::size_t s = 0; s < steps; ++s) {
    double sum = 0, lo = 0, hi = 0;
    std::size_t n = 0;
    for (const auto& m : all) {
      if (s >= m.size()) continue;
      const double v = m[s].loss;
      if (n == 0) lo = hi = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      ++n;
    }
    if (n == 0) continue;
    os << s << "," << sum / static_cast<double>(n) << "," << lo << "," << hi << "\n";
  }
  fs::create_directories(cfg.out_dir);
  write_file(fs::path(cfg.out_dir) / "bands.csv", os.str());
  return code;
}

}  // namespace

int cli_run(const std::string& config_path, const RunOverrides& overrides) {
  try {
    return run_with_reps(load_with_overrides(config_path, overrides));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  }
}

int cli_sweep(const std::string& config_path, const RunOverrides& overrides, int workers) {
  try {
    KvMap base = parse_config_text(read_file(config_path));
    // [sweep] keys hold space-separated value lists over any config key.
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (auto it = base.begin(); it != base.end();) {
      if (it->first.rfind("sweep.", 0) == 0) {
        std::istringstream vs(it->second);
        std::vector<std::string> values;
        std::string v;
        while (vs >> v) values.push_back(v);
        if (values.empty()) throw ConfigError("config: empty sweep axis " + it->first);
        axes.emplace_back(it->first.substr(6), values);
        it = base.erase(it);
      } else {
        ++it;
      }
    }
    if (axes.empty()) throw ConfigError("config: sweep needs a [sweep] section");
    std::vector<KvMap> grid{base};
    for (const auto& [key, values] : axes) {
      std::vector<KvMap> next;
      for (const auto& g : grid)
        for (const auto& v : values) {
          KvMap item = g;
          item[key] = v;
          next.push_back(std::move(item));
        }
      grid = std::move(next);
    }
    const std::string out_root = overrides.out_dir.empty() ? "sweep_out" : overrides.out_dir;
    std::atomic<std::size_t> next_idx{0};
    std::atomic<int> worst{kExitOk};
    const int n_workers = std::max(1, workers);
    auto work = [&] {
      for (;;) {
        const std::size_t i = next_idx.fetch_add(1);
        if (i >= grid.size()) return;
        try {
          ExperimentConfig cfg = ExperimentConfig::from_map(grid[i]);
          cfg.out_dir = out_root + "/run_" + std::to_string(i);
          const int code = run_with_reps(cfg);
          int cur = worst.load();
          while (code > cur && !worst.compare_exchange_weak(cur, code)) {
          }
        } catch (const std::exception& e) {
          std::cerr << "sweep run " << i << " failed: " << e.what() << "\n";
          worst.store(kExitConfigError);
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return worst.load();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

VerifyReport verify_run_dir(const std::string& run_dir) {
  VerifyReport report;
  json summary;
  try {
    summary = json::parse(read_file(fs::path(run_dir) / "summary.json"));
  } catch (const std::exception& e) {
    report.detail = std::string("cannot load summary.json: ") + e.what();
    return report;
  }
  std::string recorded_events, recorded_metrics;
  try {
    recorded_events = read_file(fs::path(run_dir) / "events.jsonl");
    recorded_metrics = read_file(fs::path(run_dir) / "metrics.csv");
  } catch (const std::exception& e) {
    report.detail = e.what();
    return report;
  }
  KvMap map;
  for (const auto& [k, v] : summary.at("config").items()) map[k] = v.get<std::string>();
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::from_map(std::move(map));
  } catch (const std::exception& e) {
    report.detail = std::string("embedded config invalid: ") + e.what();
    return report;
  }

  TraceSink trace(cfg.swarm.hash_mode);
  RunResult result;
  {
    Swarm swarm(cfg.swarm, &trace);
    result = swarm.run();
  }

  // The trace must be complete: final line carries the running digest.
  std::vector<std::string> lines;
  std::istringstream in(recorded_events);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.empty() || lines.back().find("\"end_of_run\"") == std::string::npos) {
    report.detail = "truncated trace: missing end_of_run record";
    return report;
  }
  if (lines.back() != trace.final_line()) {
    report.detail = "trace digest mismatch: events.jsonl does not match the replay";
    return report;
  }
  const auto& replayed = trace.lines();
  if (lines.size() != replayed.size() + 1) {
    report.detail = "trace length mismatch";
    return report;
  }
  for (std::size_t i = 0; i < replayed.size(); ++i) {
    if (lines[i] != replayed[i]) {
      report.detail = "trace divergence at line " + std::to_string(i + 1);
      return report;
    }
  }
  if (recorded_metrics != metrics_to_csv(result.metrics)) {
    report.detail = "metrics.csv differs from the replay";
    return report;
  }
  if (summary.at("ledger_digest").get<std::string>() != hex(result.ledger_digest)) {
    report.detail = "ban ledger diverges from the replay";
    return report;
  }
  if (!result.ledgers_agree()) {
    report.detail = "honest peers disagree on the ledger";
    return report;
  }
  std::ostringstream os;
  os << "consistent, " << result.bans.size() << " bans re-derived identically";
  report.ok = true;
  report.detail = os.str();
  return report;
}

int cli_verify(const std::string& run_dir) {
  const VerifyReport report = verify_run_dir(run_dir);
  std::cout << (report.ok ? "OK: " : "FAIL: ") << report.detail << "\n";
  return report.ok ? kExitOk : kExitDivergence;
}

}  // namespace stockade
