#pragma once

#include <map>
#include <string>
#include <vector>

#include "stockade/swarm.hpp"

namespace stockade {

/// Flat view of the declarative config file: "section.key" -> value.
/// The file format is INI-style sections with key = value lines and '#'
/// comments; see docs/FORMATS.md for the schema.
using KvMap = std::map<std::string, std::string>;

KvMap parse_config_text(const std::string& text);
std::string serialize_config(const KvMap& map);

struct ExperimentConfig {
  KvMap resolved;  // every field after defaults; echoed into summary.json
  SwarmConfig swarm;
  std::uint64_t repetitions = 1;
  std::string out_dir = "out";
  std::string preset;  // stepsize preset name, "" = explicit gamma

  static ExperimentConfig from_map(KvMap map);
  static ExperimentConfig from_file(const std::string& path);
};

std::string metrics_csv_header();
std::string metrics_to_csv(const std::vector<StepMetrics>& rows);
std::vector<StepMetrics> parse_metrics_csv(const std::string& text);

}  // namespace stockade
