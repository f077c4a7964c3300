#include "stockade/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace stockade {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Resolver {
  KvMap& map;

  std::string get(const std::string& key, const std::string& def) {
    auto it = map.find(key);
    if (it == map.end()) {
      map[key] = def;
      return def;
    }
    return it->second;
  }
  double num(const std::string& key, double def) { return to_double(key, get(key, fmt(def))); }
  std::uint64_t integer(const std::string& key, std::uint64_t def) {
    return to_u64(key, get(key, std::to_string(def)));
  }
  bool flag(const std::string& key, bool def) {
    return to_bool(key, get(key, def ? "true" : "false"));
  }
};

AttackConfig parse_attack(Resolver& r, const std::string& prefix, const AttackConfig& def) {
  AttackConfig a = def;
  const std::string kind = r.get(prefix + ".strategy", "honest");
  if (kind == "honest") a.kind = AttackConfig::Kind::Honest;
  else if (kind == "sign_flip") a.kind = AttackConfig::Kind::SignFlip;
  else if (kind == "random_direction") a.kind = AttackConfig::Kind::RandomDirection;
  else if (kind == "wrong_objective") a.kind = AttackConfig::Kind::WrongObjective;
  else if (kind == "delayed_gradient") a.kind = AttackConfig::Kind::DelayedGradient;
  else if (kind == "inner_product" || kind == "ipm")
    a.kind = AttackConfig::Kind::InnerProductManipulation;
  else if (kind == "little_is_enough" || kind == "alie")
    a.kind = AttackConfig::Kind::LittleIsEnough;
  else if (kind == "agg_shift") a.kind = AttackConfig::Kind::AggShift;
  else if (kind == "slander") a.kind = AttackConfig::Kind::Slander;
  else if (kind == "eliminate_abuse") a.kind = AttackConfig::Kind::EliminateAbuse;
  else if (kind == "silent_drop") a.kind = AttackConfig::Kind::SilentDrop;
  else throw ConfigError("config: unknown attack strategy '" + kind + "'");
  a.start_step = r.integer(prefix + ".start_step", def.start_step);
  a.period = r.integer(prefix + ".period", def.period);
  a.lambda = r.num(prefix + ".lambda", def.lambda);
  a.epsilon = r.num(prefix + ".epsilon", def.epsilon);
  a.lag = r.integer(prefix + ".lag", def.lag);
  a.shift_scale = r.num(prefix + ".shift_scale", def.shift_scale);
  a.cover_up = r.flag(prefix + ".cover_up", def.cover_up);
  return a;
}

}  // namespace

KvMap parse_config_text(const std::string& text) {
  KvMap out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config: empty section name at line " + std::to_string(lineno));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(lineno));
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) throw ConfigError("config: duplicate key " + full);
    out[full] = value;
  }
  return out;
}

std::string serialize_config(const KvMap& map) {
  // Group back into sections; keys inside a section stay sorted.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [full, value] : map) {
    const auto dot = full.find('.');
    if (dot == std::string::npos)
      sections[""].emplace_back(full, value);
    else
      sections[full.substr(0, dot)].emplace_back(full.substr(dot + 1), value);
  }
  std::ostringstream os;
  for (const auto& [section, kvs] : sections) {
    if (!section.empty()) os << "[" << section << "]\n";
    for (const auto& [k, v] : kvs) os << k << " = " << v << "\n";
    os << "\n";
  }
  return os.str();
}

ExperimentConfig ExperimentConfig::from_map(KvMap map) {
  ExperimentConfig out;
  Resolver r{map};

  // objective
  const std::string okind = r.get("objective.kind", "quadratic");
  const std::size_t dim = r.integer("objective.dim", 64);
  NoiseModel noise;
  const std::string nkind = r.get("objective.noise", "gaussian");
  if (nkind == "none") noise.kind = NoiseModel::Kind::None;
  else if (nkind == "gaussian") noise.kind = NoiseModel::Kind::Gaussian;
  else if (nkind == "heavytail") noise.kind = NoiseModel::Kind::HeavyTail;
  else throw ConfigError("config: unknown noise kind '" + nkind + "'");
  noise.sigma = r.num("objective.sigma", 1.0);
  noise.alpha = r.num("objective.alpha", 1.5);
  noise.moment_scale = r.num("objective.moment_scale", 1.0);

  Objective obj;
  if (okind == "quadratic") {
    const double curvature = r.num("objective.curvature", 1.0);
    const double optimum = r.num("objective.optimum", 0.0);
    obj = Objective::quadratic(dim, curvature, Vec(dim, optimum), noise);
  } else if (okind == "logistic") {
    obj = Objective::logistic(dim, r.integer("objective.samples", 512),
                              r.integer("objective.batch", 32),
                              r.integer("objective.dataset_seed", 7), noise);
  } else if (okind == "rastrigin") {
    obj = Objective::rastrigin(dim, r.num("objective.ripple", 0.5), noise);
  } else {
    throw ConfigError("config: unknown objective kind '" + okind + "'");
  }

  // swarm
  SwarmConfig sw;
  sw.objective = std::move(obj);
  sw.n_peers = r.integer("swarm.peers", 16);
  const std::size_t byz = r.integer("swarm.byzantine", 0);
  sw.validators = static_cast<int>(r.integer("swarm.validators", 1));
  sw.steps = r.integer("swarm.steps", 100);
  sw.seed = r.integer("swarm.seed", 1);
  const std::string hm = r.get("swarm.hash_mode", "crypto");
  if (hm == "crypto") sw.hash_mode = HashMode::Crypto;
  else if (hm == "fast-sim") sw.hash_mode = HashMode::FastSim;
  else throw ConfigError("config: hash_mode must be crypto or fast-sim");
  sw.declared_attacker_count = r.flag("swarm.declared_attackers", false);
  sw.reorder_seed = r.integer("swarm.reorder_seed", 0);
  sw.delta_max_sigma = r.num("swarm.delta_max_sigma", -1.0);

  // clip policy
  const std::string cmode = r.get("clip.mode", "infinite");
  const double tol = r.num("clip.tol", 1e-6);
  const int iters = static_cast<int>(r.integer("clip.max_iters", 1000));
  if (cmode == "infinite") sw.clip = ClipConfig::infinite();
  else if (cmode == "fixed") sw.clip = ClipConfig::fixed(r.num("clip.tau", 1.0), tol, iters);
  else if (cmode == "schedule")
    sw.clip = ClipConfig::schedule(r.num("clip.delta", 0.1), r.num("clip.sigma", 1.0),
                                   r.num("clip.b0_sq", 0.0), tol, iters);
  else throw ConfigError("config: clip.mode must be infinite, fixed or schedule");

  // trainer
  const std::string variant = r.get("trainer.variant", "plain");
  if (variant == "plain") sw.variant = SwarmConfig::Variant::Plain;
  else if (variant == "clipped") sw.variant = SwarmConfig::Variant::Clipped;
  else throw ConfigError("config: trainer.variant must be plain or clipped");
  sw.gamma = r.num("trainer.gamma", 0.01);
  out.preset = r.get("trainer.preset", "none");
  sw.moment_bound = r.num("trainer.moment_bound", 1.0);
  sw.lambda_total = r.num("trainer.lambda", 0.0);
  sw.domain.radius = r.num("trainer.q_radius", 0.0);
  const double start = r.num("trainer.start", 1.0);
  sw.x0 = Vec(sw.objective.dim, start);

  if (out.preset == "nonconvex") {
    const double L = sw.objective.smoothness();
    const double d0 = sw.objective.value(sw.x0) -
                      (sw.objective.has_analytic_optimum() ? sw.objective.optimum_value() : 0.0);
    sw.gamma = stepsize_nonconvex(L, d0, static_cast<double>(sw.n_peers),
                                  sw.objective.noise.sigma, static_cast<double>(sw.steps));
  } else if (out.preset != "none") {
    throw ConfigError("config: unknown trainer.preset '" + out.preset + "'");
  }

  // attacks: the last `byzantine` peers follow [attack] unless an
  // [attack.<peer>] section overrides them.
  if (byz > 0) {
    const AttackConfig base = parse_attack(r, "attack", AttackConfig{});
    if (base.kind == AttackConfig::Kind::Honest)
      throw ConfigError("config: byzantine > 0 needs an [attack] strategy");
    sw.attacks.assign(sw.n_peers, AttackConfig{});
    for (std::size_t k = 0; k < byz && k < sw.n_peers; ++k)
      sw.attacks[sw.n_peers - 1 - k] = base;
  }
  for (const auto& [key, value] : map) {
    (void)value;
    if (key.rfind("attack.", 0) != 0) continue;
    const auto rest = key.substr(7);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) continue;
    const std::string peer_str = rest.substr(0, dot);
    if (peer_str.find_first_not_of("0123456789") != std::string::npos) continue;
    const PeerId peer = static_cast<PeerId>(to_u64(key, peer_str));
    if (peer >= sw.n_peers) throw ConfigError("config: attack peer id out of range");
    if (sw.attacks.empty()) sw.attacks.assign(sw.n_peers, AttackConfig{});
    sw.attacks[peer] = parse_attack(r, "attack." + peer_str, sw.attacks[peer]);
  }

  // reputation / joiners "id:step,id:step"
  sw.reputation_threshold = static_cast<std::uint32_t>(r.integer("reputation.threshold", 8));
  const std::string joiners = r.get("reputation.joiners", "");
  if (!joiners.empty()) {
    std::istringstream js(joiners);
    std::string item;
    while (std::getline(js, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("config: joiners need id:step");
      JoinSpec spec;
      spec.peer = static_cast<PeerId>(to_u64("reputation.joiners", trim(item.substr(0, colon))));
      spec.join_step = to_u64("reputation.joiners", trim(item.substr(colon + 1)));
      sw.joiners.push_back(spec);
    }
  }

  // output
  out.out_dir = r.get("output.dir", "out");
  sw.snapshot_every = r.integer("output.snapshot_every", 0);
  sw.record_trajectory = r.flag("output.trajectory", false);
  out.repetitions = r.integer("output.repetitions", 1);

  sw.validate();
  out.swarm = std::move(sw);
  out.resolved = std::move(map);
  return out;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_map(parse_config_text(buf.str()));
}

std::string metrics_csv_header() {
  return "step,loss,grad_norm,active_peers,participants,bans_gradient_fraud,"
         "bans_aggregation_fraud,bans_false_accusation,bans_protocol_violation,"
         "bans_mutual_eliminate,bans_cover_up,check_averaging_triggers,mprng_restarts,"
         "broadcast_bytes,p2p_bytes";
}

std::string metrics_to_csv(const std::vector<StepMetrics>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << metrics_csv_header() << "\n";
  for (const auto& r : rows) {
    os << r.step << "," << r.loss << "," << r.grad_norm << "," << r.active_peers << ","
       << r.participants;
    for (int c = 0; c < kBanCauseCount; ++c) os << "," << r.bans_by_cause[c];
    os << "," << r.check_averaging_triggers << "," << r.mprng_restarts << ","
       << r.broadcast_bytes << "," << r.p2p_bytes << "\n";
  }
  return os.str();
}

std::vector<StepMetrics> parse_metrics_csv(const std::string& text) {
  std::vector<StepMetrics> out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("metrics csv: empty");
  if (line != metrics_csv_header()) throw Error("metrics csv: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 15) throw Error("metrics csv: bad row");
    StepMetrics r;
    r.step = to_u64("step", cells[0]);
    r.loss = to_double("loss", cells[1]);
    r.grad_norm = to_double("grad_norm", cells[2]);
    r.active_peers = static_cast<std::uint32_t>(to_u64("active", cells[3]));
    r.participants = static_cast<std::uint32_t>(to_u64("participants", cells[4]));
    for (int c = 0; c < kBanCauseCount; ++c)
      r.bans_by_cause[c] = static_cast<std::uint32_t>(to_u64("bans", cells[5 + c]));
    r.check_averaging_triggers = static_cast<std::uint32_t>(to_u64("trig", cells[11]));
    r.mprng_restarts = static_cast<std::uint32_t>(to_u64("restarts", cells[12]));
    r.broadcast_bytes = to_u64("bb", cells[13]);
    r.p2p_bytes = to_u64("pb", cells[14]);
    out.push_back(r);
  }
  return out;
}

}  // namespace stockade
