#include "stockade/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>

namespace stockade {

namespace {

// Phase codes double as the deterministic ordering key for unilateral
// verdicts derived at phase boundaries.
constexpr std::uint32_t PH_GRAD = 0;
constexpr std::uint32_t PH_PART_HASH = 1;
constexpr std::uint32_t PH_PART_SEND = 2;
constexpr std::uint32_t PH_ELIM_EARLY = 3;
constexpr std::uint32_t PH_AGG_HASH = 5;
constexpr std::uint32_t PH_MPRNG_BASE = 10;   // +2*attempt (commit), +2*attempt+1 (reveal)
constexpr std::uint32_t PH_AGG_SEND = 200;
constexpr std::uint32_t PH_RECOVERY = 210;
constexpr std::uint32_t PH_CHECKSUM = 220;
constexpr std::uint32_t PH_CHECKFLAG = 230;
constexpr std::uint32_t PH_ROUND_ONE = 240;
constexpr std::uint32_t PH_CHECK_AVG = 250;
constexpr std::uint32_t PH_ACCUSE = 260;
constexpr std::uint32_t PH_JUDGE = 270;
constexpr std::uint32_t PH_UPDATE = 280;

struct Verdict {
  std::uint64_t order = 0;  // (phase << 16) | sub-order
  PeerId target = kNoPeer;
  BanCause cause = BanCause::ProtocolViolation;
};

std::uint64_t verdict_order(std::uint32_t phase, std::uint32_t sub) {
  return (static_cast<std::uint64_t>(phase) << 32) | sub;
}

}  // namespace

void SwarmConfig::validate() const {
  if (n_peers < 1) throw ConfigError("swarm: need at least one peer");
  if (objective.dim < n_peers)
    throw ConfigError("swarm: dimension must be at least the peer count");
  if (validators < 0) throw ConfigError("swarm: validators must be non-negative");
  const std::size_t b = byzantine_count();
  if (2 * b >= n_peers) throw ConfigError("swarm: byzantine peers must be a minority (b < n/2)");
  if (declared_attacker_count) {
    // Theorem precondition for the known-count schedule.
    if (2 * validators > static_cast<int>(n_peers - 2 * b))
      throw ConfigError("swarm: declared attacker count requires m <= (n - 2b)/2");
  }
  if (!(gamma > 0.0)) throw ConfigError("swarm: stepsize must be positive");
  if (variant == Variant::Clipped) {
    if (!domain.bounded()) throw ConfigError("swarm: clipped variant requires a bounded domain");
    if (!(moment_bound > 0.0) && !(lambda_total > 0.0))
      throw ConfigError("swarm: clipped variant needs a moment bound or explicit lambda");
  }
  if (!x0.empty() && x0.size() != objective.dim)
    throw ConfigError("swarm: x0 dimension mismatch");
  if (!attacks.empty() && attacks.size() != n_peers)
    throw ConfigError("swarm: attacks must list every peer or none");
  for (const auto& j : joiners) {
    if (j.peer >= n_peers) throw ConfigError("swarm: joiner id out of range");
    if (attack_of(j.peer).kind == AttackConfig::Kind::AggShift)
      throw ConfigError("swarm: joiners never aggregate");
  }
  std::vector<bool> byz(n_peers, false);
  for (PeerId p = 0; p < n_peers; ++p) byz[p] = attack_of(p).byzantine();
  validate_faults(faults, byz);
  clip.validate();
}

std::size_t SwarmConfig::byzantine_count() const {
  std::size_t b = 0;
  for (PeerId p = 0; p < n_peers; ++p)
    if (attack_of(p).byzantine()) ++b;
  return b;
}

AttackConfig SwarmConfig::attack_of(PeerId peer) const {
  if (attacks.empty() || peer >= attacks.size()) return AttackConfig{};
  return attacks[peer];
}

bool RunResult::ledgers_agree() const {
  for (const auto& d : honest_ledger_digests)
    if (d != ledger_digest) return false;
  return true;
}

std::optional<std::uint64_t> RunResult::ban_step_of(PeerId peer) const {
  for (const auto& r : bans)
    if (r.peer == peer) return r.step;
  return std::nullopt;
}

std::uint64_t next_gradient_seed(HashMode mode, const std::array<std::uint8_t, 32>& r,
                                 PeerId peer) {
  Bytes buf(r.begin(), r.end());
  append_u64(buf, peer);
  const Digest d = hash_bytes(mode, buf);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | d[k];
  return v;
}

std::array<std::uint8_t, 32> initial_chain_value(HashMode mode, std::uint64_t seed) {
  Bytes buf;
  for (const char c : std::string_view("chain0")) buf.push_back(static_cast<std::uint8_t>(c));
  append_u64(buf, seed);
  return hash_bytes(mode, buf);
}

std::uint64_t peer_stream_seed(HashMode mode, std::uint64_t run_seed, PeerId peer,
                               std::string_view role) {
  Bytes buf;
  for (const char c : role) buf.push_back(static_cast<std::uint8_t>(c));
  append_u64(buf, run_seed);
  append_u64(buf, peer);
  const Digest d = hash_bytes(mode, buf);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | d[k];
  return v;
}

void apply_sgd_step(Vec& x, const Vec& g, double gamma, const Domain& domain) {
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = x[c] - gamma * g[c];
  if (domain.bounded()) x = domain.project(std::move(x));
}

// ---------------------------------------------------------------------------

struct Swarm::Impl {
  struct Peer {
    PeerId id = kNoPeer;
    KeyPair keys;
    AttackConfig attack;
    bool core = true;              // founding roster member
    std::uint64_t join_step = 0;   // joiners only
    bool admitted = false;         // joiners: passed the queue
    SeededStream mprng_rng{0};
    BanLedger ledger{0};
    Vec x;
    std::uint64_t xi = 0;

    // per-step working state
    Vec protocol_gradient;           // committed / sent this step
    Vec true_gradient;               // honest value (post per-part clipping)
    std::vector<Vec> own_parts;      // split of protocol_gradient
    std::map<PeerId, Vec> held_parts;
    std::set<PeerId> excluded_inputs;
    Vec clip_output;
    Vec sent_aggregate;
    Vec reported_checksums;
    Vec reported_norms;
    StepPublicInfo info;
    std::deque<StepPublicInfo> past;
    std::vector<Verdict> verdicts;           // unilateral, from broadcast evidence
    std::vector<Message> accusation_queue;   // broadcast at the accuse phase
    std::vector<Message> early_eliminations; // broadcast right after the part phase
    std::vector<Message> step_accusations;   // everything seen, judged at step end
    std::map<std::pair<std::uint64_t, PeerId>, Digest> seen_broadcasts;  // contradiction check

    std::vector<Vec> gradient_log;   // true protocol gradients (delayed-gradient attacks)
    PeerId recalculated_for = kNoPeer;
    Digest recalculated_digest{};
  };

  SwarmConfig cfg;
  TraceSink* trace = nullptr;
  HashMode mode;
  std::vector<Peer> peers;
  std::vector<ReputationRecord> records;
  JoinQueue join_queue;
  BroadcastChannel bcast;
  P2PNetwork p2p;
  std::uint64_t attack_seed = 0;

  std::uint64_t step_ = 0;
  std::array<std::uint8_t, 32> chain{};
  std::array<std::uint8_t, 32> r_t{};
  ValidatorElection election;                      // for the current step
  std::vector<std::pair<PeerId, PeerId>> joiner_checks;  // (validator, joiner)
  bool aborted = false;
  std::vector<StepMetrics> metrics;
  std::vector<std::pair<std::uint64_t, Vec>> snapshots;
  std::vector<Vec> trajectory;
  std::uint64_t gamma_override_until = 0;
  double gamma_current = 0.0;

  // step-scoped
  std::vector<PeerId> core_active;     // trusted, unbanned, sorted
  std::vector<PeerId> participants;    // core_active minus checkers
  std::vector<PeerId> active_joiners;  // admitted untrusted peers
  std::vector<PeerId> checkers, targets;
  PartitionLayout layout;
  Vec tau_eff;
  double delta_max = 0.0;
  double lambda_k = 0.0;
  std::uint32_t mprng_restarts = 0;
  std::uint32_t checkavg_triggers = 0;
  std::uint64_t bb0 = 0, pb0 = 0;  // byte counters at step start
  std::uint32_t cur_phase = 0;
  std::map<PeerId, std::map<PeerId, Vec>> rebroadcast_buffer;

  Impl(SwarmConfig c, TraceSink* t)
      : cfg(std::move(c)),
        trace(t),
        mode(cfg.hash_mode),
        bcast(cfg.hash_mode, cfg.n_peers, cfg.reorder_seed),
        p2p(cfg.hash_mode, cfg.n_peers) {
    cfg.validate();
    gamma_current = cfg.gamma;
    if (cfg.x0.empty()) cfg.x0 = Vec(cfg.objective.dim, 0.0);
    chain = initial_chain_value(mode, cfg.seed);
    {
      Bytes buf;
      for (const char c2 : std::string_view("attack")) buf.push_back(std::uint8_t(c2));
      append_u64(buf, cfg.seed);
      const Digest d = hash_bytes(mode, buf);
      for (int k = 7; k >= 0; --k) attack_seed = (attack_seed << 8) | d[k];
    }
    peers.resize(cfg.n_peers);
    std::set<PeerId> joiner_set;
    for (const auto& j : cfg.joiners) joiner_set.insert(j.peer);
    for (PeerId p = 0; p < cfg.n_peers; ++p) {
      Peer& peer = peers[p];
      peer.id = p;
      peer.attack = cfg.attack_of(p);
      peer.ledger = BanLedger(cfg.n_peers);
      peer.x = cfg.x0;
      Bytes kb;
      for (const char c2 : std::string_view("key")) kb.push_back(std::uint8_t(c2));
      append_u64(kb, cfg.seed);
      append_u64(kb, p);
      peer.keys = KeyPair::from_seed(mode, hash_bytes(mode, kb));
      peer.mprng_rng = SeededStream(peer_stream_seed(mode, cfg.seed, p, "mprng"));
      peer.core = !joiner_set.count(p);
      records.push_back(peer.core ? ReputationRecord::genesis(p)
                                  : ReputationRecord::joiner(p, cfg.reputation_threshold));
    }
    for (const auto& j : cfg.joiners) peers[j.peer].join_step = j.join_step;
  }

  // ---- roster helpers ------------------------------------------------------

  const BanLedger& consensus() const { return peers[first_honest()].ledger; }

  PeerId first_honest() const {
    for (const auto& p : peers)
      if (!p.attack.byzantine()) return p.id;
    return 0;
  }

  bool is_honest(PeerId p) const { return !peers[p].attack.byzantine(); }

  std::vector<PeerId> compute_core_active() const {
    std::vector<PeerId> out;
    for (const auto& p : peers)
      if (p.core && !consensus().is_banned(p.id)) out.push_back(p.id);
    return out;
  }

  LogicalTime now(std::uint32_t phase, std::uint32_t seq = 0) const {
    return {step_, phase, seq};
  }

  void emit(std::uint32_t phase, const std::string& kind, PeerId actor,
            const std::string& detail = "") {
    if (trace) trace->emit(now(phase), kind, actor, detail);
  }

  // ---- message plumbing ----------------------------------------------------

  bool fault_matches(const FaultSpec& f, PeerId from, PeerId to, MsgKind kind) const {
    if (f.kind == FaultSpec::Kind::Reorder) return false;
    if (f.from != from || f.msg_kind != kind) return false;
    if (f.to != kNoPeer && f.to != to) return false;
    return step_ >= f.step_from && step_ <= f.step_to;
  }

  void publish(Peer& sender, MsgKind kind, Bytes payload) {
    Message m = make_signed(mode, sender.keys, step_, sender.id, kind, std::move(payload));
    bool dropped = false;
    for (const auto& f : cfg.faults) {
      if (!fault_matches(f, sender.id, kNoPeer, kind)) continue;
      if (f.kind == FaultSpec::Kind::Drop) dropped = true;
      if (f.kind == FaultSpec::Kind::Duplicate) {
        Message dup = m;
        if (f.mutate_payload && !dup.payload.empty()) {
          dup.payload[dup.payload.size() - 1] ^= 0xFF;
          dup.signature = sign(mode, sender.keys, dup.signed_bytes());
        }
        bcast.publish(dup);
        if (trace) trace->message_event(now(cur_phase), dup);
      }
    }
    if (dropped) return;
    bcast.publish(m);
    if (trace) trace->message_event(now(cur_phase), m);
  }

  void send_p2p(Peer& sender, PeerId to, MsgKind kind, Bytes payload) {
    Message m = make_signed(mode, sender.keys, step_, sender.id, kind, std::move(payload));
    for (const auto& f : cfg.faults) {
      if (!fault_matches(f, sender.id, to, kind)) continue;
      if (f.kind == FaultSpec::Kind::Drop) return;
      if (f.kind == FaultSpec::Kind::Duplicate) {
        Message dup = m;
        if (f.mutate_payload && !dup.payload.empty()) {
          dup.payload[dup.payload.size() - 1] ^= 0xFF;
          dup.signature = sign(mode, sender.keys, dup.signed_bytes());
        }
        p2p.send(dup, to);
      }
    }
    p2p.send(m, to);
  }

  /// Collects the phase's broadcasts for one peer, drops invalid signatures,
  /// and registers contradiction evidence (same sender, same phase, same
  /// index key, different bytes -> unilateral ban).
  std::vector<Message> take_broadcasts(Peer& peer, std::uint32_t phase) {
    std::vector<Message> msgs = bcast.collect(peer.id, now(phase));
    std::vector<Message> ok;
    for (auto& m : msgs) {
      if (m.sender >= peers.size()) continue;
      if (!check_signature(mode, peers[m.sender].keys.public_key, m)) continue;
      // Contradiction evidence is keyed per (phase, kind, index): a sender
      // re-broadcasting the same slot with different bytes is banned.
      std::uint64_t key = (static_cast<std::uint64_t>(phase) << 24) |
                          (static_cast<std::uint64_t>(m.kind) << 16);
      if (m.kind == MsgKind::Part || m.kind == MsgKind::AggPart) {
        const auto iv = parse_index_vector(m.payload);
        if (iv) key |= (iv->index & 0xFFFF);
      }
      if (m.kind != MsgKind::Accuse && m.kind != MsgKind::Eliminate) {
        auto [it, fresh] = peer.seen_broadcasts.try_emplace({key, m.sender}, m.digest(mode));
        if (!fresh && it->second != m.digest(mode)) {
          peer.verdicts.push_back(
              {verdict_order(phase, m.sender), m.sender, BanCause::ProtocolViolation});
          continue;
        }
      }
      ok.push_back(std::move(m));
    }
    return ok;
  }

  void broadcast_phase_for_all(std::uint32_t phase,
                               const std::function<void(Peer&)>& produce,
                               const std::function<void(Peer&, const Message&)>& consume) {
    for (auto& p : peers) produce(p);
    for (auto& p : peers) {
      for (const Message& m : take_broadcasts(p, phase)) consume(p, m);
    }
    bcast.end_phase();
  }

  // declared in part 2 of this file
  void step();
  RunResult run();
  Vec run_segment(std::uint64_t k, double gamma);
  RunResult harvest();

  bool begin_step();
  void phase_gradients();
  void phase_part_hash();
  void phase_part_send();
  void phase_elim_early();
  void phase_aggregate();
  void phase_agg_hash();
  bool phase_mprng();
  void phase_agg_send();
  void recover_partition(std::uint64_t j, std::uint32_t phase);
  void phase_checksums();
  void phase_check_flags();
  void phase_round_one();
  void phase_check_averaging();
  void phase_accusations();
  void phase_judge();
  void phase_update();

  ClipConfig clip_config_for_partition(std::uint64_t j, double delta_hat) const;
  double declared_delta_hat() const;
  void queue_accusation(Peer& p, PeerId target, std::uint64_t ref_step, ViolationReason reason,
                        bool eliminate);
  Vec compute_protocol_gradient(const Vec& x, std::uint64_t xi) const;
  const Objective& objective() const { return cfg.objective; }
};

}  // namespace stockade

#include "swarm_step.inc"

namespace stockade {

Swarm::Swarm(SwarmConfig cfg, TraceSink* trace)
    : impl_(std::make_unique<Impl>(std::move(cfg), trace)) {}

Swarm::~Swarm() = default;

RunResult Swarm::run() { return impl_->run(); }

Vec Swarm::run_segment(std::uint64_t k, double gamma) { return impl_->run_segment(k, gamma); }

const Vec& Swarm::model() const { return impl_->peers[impl_->first_honest()].x; }

void Swarm::reset_model(const Vec& x) {
  for (auto& p : impl_->peers) p.x = x;
}

RunResult Swarm::harvest() { return impl_->harvest(); }

RestartRun run_restarted(const SwarmConfig& cfg, const RestartSchedule& schedule,
                         TraceSink* trace) {
  RestartRun out;
  if (schedule.restarts < 1) {
    Swarm swarm(cfg, trace);
    out.result = swarm.run();
    out.restart_points.push_back(out.result.final_x);
    return out;
  }
  SwarmConfig seg_cfg = cfg;
  seg_cfg.steps = 0;  // segments are driven explicitly
  Swarm swarm(seg_cfg, trace);
  for (int t = 0; t < schedule.restarts; ++t) {
    const Vec avg = swarm.run_segment(static_cast<std::uint64_t>(schedule.iters[t]),
                                      schedule.gammas[t]);
    out.restart_points.push_back(avg);
    swarm.reset_model(avg);
  }
  out.result = swarm.harvest();
  return out;
}

}  // namespace stockade
