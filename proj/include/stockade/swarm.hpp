#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "stockade/adversary.hpp"
#include "stockade/messages.hpp"
#include "stockade/optim.hpp"
#include "stockade/protocol.hpp"
#include "stockade/reputation.hpp"
#include "stockade/robustagg.hpp"
#include "stockade/simnet.hpp"

namespace stockade {

struct JoinSpec {
  PeerId peer = kNoPeer;
  std::uint64_t join_step = 0;
};

struct SwarmConfig {
  std::size_t n_peers = 16;
  int validators = 1;  // m peers checked per step
  std::uint64_t steps = 100;
  std::uint64_t seed = 1;
  HashMode hash_mode = HashMode::Crypto;

  ClipConfig clip = ClipConfig::infinite();
  /// Known-attacker-count mode: the per-round clipping radius follows the
  /// schedule with delta = (attacking Byzantines)/(participants); delta = 0
  /// routes to the exact mean. Requires m <= (n - 2b)/2.
  bool declared_attacker_count = false;

  enum class Variant : std::uint8_t { Plain, Clipped };
  Variant variant = Variant::Plain;
  double gamma = 0.01;
  double moment_bound = 1.0;   // G of the alpha-moment assumption
  double lambda_total = 0.0;   // clipped variant: lambda; 0 = G * K^(1/alpha)
  Domain domain;

  Objective objective;
  Vec x0;

  std::vector<AttackConfig> attacks;  // per peer; missing entries = honest
  double delta_max_sigma = -1.0;      // sigma for the deviation filter; <0 = noise sigma

  std::uint32_t reputation_threshold = 8;
  std::vector<JoinSpec> joiners;

  std::vector<FaultSpec> faults;
  std::uint64_t reorder_seed = 0;
  bool record_trajectory = false;
  std::uint64_t snapshot_every = 0;  // 0 = no snapshots

  void validate() const;
  std::size_t byzantine_count() const;
  AttackConfig attack_of(PeerId peer) const;
};

struct StepMetrics {
  std::uint64_t step = 0;
  double loss = 0.0;       // f(x) - f* when analytic, else f(x)
  double grad_norm = 0.0;  // ||grad f(x)||
  std::uint32_t active_peers = 0;
  std::uint32_t participants = 0;
  std::array<std::uint32_t, kBanCauseCount> bans_by_cause{};  // cumulative
  std::uint32_t check_averaging_triggers = 0;                 // this step
  std::uint32_t mprng_restarts = 0;                           // this step
  std::uint64_t broadcast_bytes = 0;                          // this step, all senders
  std::uint64_t p2p_bytes = 0;                                // this step, all links
};

struct RunResult {
  Vec final_x;
  std::vector<StepMetrics> metrics;
  std::vector<BanRecord> bans;
  bool aborted_all_banned = false;
  std::uint64_t steps_run = 0;
  Digest ledger_digest{};
  std::vector<Digest> honest_ledger_digests;  // one per surviving honest peer
  Digest trace_digest{};
  std::vector<std::pair<std::uint64_t, Vec>> snapshots;
  std::vector<Vec> trajectory;  // filled when record_trajectory is set

  bool ledgers_agree() const;
  std::optional<std::uint64_t> ban_step_of(PeerId peer) const;
};

/// One gradient seed of the public chain: seed_i^{t+1} = hash(r^t || i).
std::uint64_t next_gradient_seed(HashMode mode, const std::array<std::uint8_t, 32>& r,
                                 PeerId peer);
/// Initial chain value, derived from the experiment seed.
std::array<std::uint8_t, 32> initial_chain_value(HashMode mode, std::uint64_t seed);
/// Seed of one peer's private randomness stream for a given role ("mprng");
/// part of the documented randomness schedule so that reference
/// implementations can reproduce the shared-randomness chain.
std::uint64_t peer_stream_seed(HashMode mode, std::uint64_t run_seed, PeerId peer,
                               std::string_view role);

/// Projected SGD update x <- proj(x - gamma * g); shared with the serial
/// reference so the two routes agree bit-for-bit.
void apply_sgd_step(Vec& x, const Vec& g, double gamma, const Domain& domain);

/// The deterministic round engine: n peers exchanging signed messages over
/// the simulated broadcast/point-to-point channels, aggregating with
/// CenteredClip, verifying checksums, electing validators and maintaining
/// per-peer ban ledgers. Construction wires everything; run() executes the
/// configured number of steps.
class Swarm {
 public:
  explicit Swarm(SwarmConfig cfg, TraceSink* trace = nullptr);
  ~Swarm();

  Swarm(const Swarm&) = delete;
  Swarm& operator=(const Swarm&) = delete;

  /// Runs cfg.steps steps (or until every aggregator is banned).
  RunResult run();

  /// Restart driver support: runs `k` more steps with stepsize `gamma`,
  /// returns the running average of the segment iterates.
  Vec run_segment(std::uint64_t k, double gamma);

  const Vec& model() const;
  void reset_model(const Vec& x);
  RunResult harvest();  // result assembled from whatever has run so far

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Restarted variant: segments of the schedule starting from the running
/// average of the previous segment.
struct RestartRun {
  std::vector<Vec> restart_points;  // x-hat after each restart
  RunResult result;
};
RestartRun run_restarted(const SwarmConfig& cfg, const RestartSchedule& schedule,
                         TraceSink* trace = nullptr);

}  // namespace stockade
