#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stockade/swarm.hpp"

using namespace stockade;

TEST_SUITE_BEGIN("swarm");

namespace {

SwarmConfig base_config(std::size_t n = 8, std::size_t d = 16, std::uint64_t steps = 12) {
  SwarmConfig cfg;
  cfg.n_peers = n;
  cfg.validators = 2;
  cfg.steps = steps;
  cfg.seed = 11;
  cfg.hash_mode = HashMode::FastSim;
  NoiseModel noise;
  noise.kind = NoiseModel::Kind::Gaussian;
  noise.sigma = 0.5;
  cfg.objective = Objective::quadratic(d, 1.0, Vec(d, 0.0), noise);
  cfg.x0 = Vec(d, 1.0);
  cfg.gamma = 0.05;
  cfg.clip = ClipConfig::infinite();
  return cfg;
}

void set_attack(SwarmConfig& cfg, PeerId peer, AttackConfig attack) {
  if (cfg.attacks.empty()) cfg.attacks.assign(cfg.n_peers, AttackConfig{});
  cfg.attacks[peer] = attack;
}

int count_cause(const RunResult& r, BanCause cause) {
  int n = 0;
  for (const auto& b : r.bans)
    if (b.cause == cause) ++n;
  return n;
}

bool honest_banned(const SwarmConfig& cfg, const RunResult& r) {
  for (const auto& b : r.bans)
    if (!cfg.attack_of(b.peer).byzantine()) return true;
  return false;
}

}  // namespace

TEST_CASE("honest run: no bans, agreeing ledgers, decreasing loss") {
  SwarmConfig cfg = base_config();
  Swarm swarm(cfg);
  const RunResult r = swarm.run();
  CHECK(r.steps_run == cfg.steps);
  CHECK(r.bans.empty());
  CHECK(r.ledgers_agree());
  CHECK(r.honest_ledger_digests.size() == cfg.n_peers);
  CHECK(r.metrics.back().loss < r.metrics.front().loss);
  CHECK(r.metrics.back().active_peers == cfg.n_peers);
  CHECK_FALSE(r.aborted_all_banned);
}

TEST_CASE("full determinism: byte-identical traces and metrics") {
  const SwarmConfig cfg = base_config();
  TraceSink t1(cfg.hash_mode), t2(cfg.hash_mode);
  RunResult r1 = Swarm(cfg, &t1).run();
  RunResult r2 = Swarm(cfg, &t2).run();
  CHECK(t1.trace_digest() == t2.trace_digest());
  CHECK(r1.final_x == r2.final_x);
  CHECK(r1.ledger_digest == r2.ledger_digest);
}

TEST_CASE("honest paths synchronize exactly twice per step") {
  SwarmConfig cfg = base_config(6, 12, 5);
  TraceSink trace(cfg.hash_mode);
  Swarm(cfg, &trace).run();
  std::size_t barriers = 0, check_avg = 0;
  for (const auto& line : trace.lines()) {
    if (line.find("\"barrier\"") != std::string::npos) ++barriers;
    if (line.find("check_averaging") != std::string::npos) ++check_avg;
  }
  CHECK(barriers == 2 * cfg.steps);
  CHECK(check_avg == 0);
}

TEST_CASE("honest trajectory equals serial averaged SGD bit-for-bit") {
  SwarmConfig cfg = base_config(4, 8, 20);
  cfg.validators = 0;  // every peer participates every step
  cfg.hash_mode = HashMode::Crypto;
  cfg.record_trajectory = true;
  Swarm swarm(cfg);
  const RunResult r = swarm.run();

  // Serial reference. Reproduces the documented randomness schedule: each
  // peer's commit-reveal stream yields two 32-byte blocks per round and the
  // round output is the XOR of the x-blocks.
  std::vector<SeededStream> mprng;
  for (PeerId p = 0; p < cfg.n_peers; ++p)
    mprng.emplace_back(peer_stream_seed(cfg.hash_mode, cfg.seed, p, "mprng"));
  auto chain = initial_chain_value(cfg.hash_mode, cfg.seed);
  Vec x = cfg.x0;
  for (std::uint64_t t = 0; t < cfg.steps; ++t) {
    std::vector<Vec> grads;
    for (PeerId p = 0; p < cfg.n_peers; ++p)
      grads.push_back(
          compute_gradient(cfg.objective, x, next_gradient_seed(cfg.hash_mode, chain, p)));
    const Vec mean = mean_vec(grads);
    apply_sgd_step(x, mean, cfg.gamma, cfg.domain);
    std::array<std::uint8_t, 32> rt{};
    for (PeerId p = 0; p < cfg.n_peers; ++p) {
      const auto xblock = mprng[p].next_block();
      mprng[p].next_block();  // salt
      for (int k = 0; k < 32; ++k) rt[k] ^= xblock[k];
    }
    chain = rt;
    REQUIRE(r.trajectory[t].size() == x.size());
    for (std::size_t c = 0; c < x.size(); ++c) CHECK(r.trajectory[t][c] == x[c]);
  }
}

TEST_CASE("a sign-flipping attacker is caught by gradient replay") {
  SwarmConfig cfg = base_config(8, 16, 40);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::SignFlip;
  attack.lambda = 100.0;
  attack.start_step = 3;
  set_attack(cfg, 7, attack);
  cfg.clip = ClipConfig::fixed(1.0);
  const RunResult r = Swarm(cfg).run();
  REQUIRE_FALSE(r.bans.empty());
  CHECK(r.ban_step_of(7).has_value());
  CHECK(count_cause(r, BanCause::GradientFraud) == 1);
  CHECK_FALSE(honest_banned(cfg, r));
  CHECK(r.ledgers_agree());
}

TEST_CASE("silent part withholding costs one honest peer and the attacker") {
  SwarmConfig cfg = base_config(8, 16, 10);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::SilentDrop;
  attack.start_step = 2;
  set_attack(cfg, 6, attack);
  const RunResult r = Swarm(cfg).run();
  CHECK(r.ban_step_of(6) == 2);
  int honest_losses = 0;
  for (const auto& b : r.bans)
    if (!cfg.attack_of(b.peer).byzantine()) ++honest_losses;
  CHECK(honest_losses == 1);
  CHECK(r.bans.size() == 2);  // exactly the mutual pair
  CHECK(r.ledgers_agree());
}

TEST_CASE("slander bans the accuser, not the target") {
  SwarmConfig cfg = base_config(8, 16, 8);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::Slander;
  attack.start_step = 2;
  set_attack(cfg, 5, attack);
  const RunResult r = Swarm(cfg).run();
  REQUIRE(r.ban_step_of(5).has_value());
  CHECK(count_cause(r, BanCause::FalseAccusation) >= 1);
  CHECK_FALSE(honest_banned(cfg, r));
}

TEST_CASE("eliminate abuse removes at most one honest peer per Byzantine") {
  SwarmConfig cfg = base_config(8, 16, 8);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::EliminateAbuse;
  attack.start_step = 1;
  set_attack(cfg, 6, attack);
  set_attack(cfg, 7, attack);
  const RunResult r = Swarm(cfg).run();
  int byz = 0, honest = 0;
  for (const auto& b : r.bans)
    (cfg.attack_of(b.peer).byzantine() ? byz : honest) += 1;
  CHECK(byz == 2);
  CHECK(honest <= 2);
  // the Byzantine fraction never increases: (delta*n - k_b)/(n - k_b - k_h)
  const double before = 2.0 / 8.0;
  const double after =
      double(2 - byz) / double(8 - int(r.bans.size()));
  CHECK(after <= before);
}

TEST_CASE("aggregation forgery with cover-up survives checksums, falls to replay") {
  SwarmConfig cfg = base_config(6, 12, 60);
  cfg.validators = 2;
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::AggShift;
  attack.start_step = 2;
  attack.shift_scale = 0.4;  // inside the deviation filter
  attack.cover_up = true;
  set_attack(cfg, 5, attack);
  const RunResult r = Swarm(cfg).run();
  REQUIRE(r.ban_step_of(5).has_value());
  CHECK(count_cause(r, BanCause::AggregationFraud) >= 1);
  CHECK_FALSE(honest_banned(cfg, r));
  // No majority trigger: the shift stayed under delta_max.
  std::uint32_t triggers = 0;
  for (const auto& m : r.metrics) triggers += m.check_averaging_triggers;
  CHECK(triggers == 0);
}

TEST_CASE("aggregation forgery without cover-up is flagged the same step") {
  SwarmConfig cfg = base_config(6, 12, 10);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::AggShift;
  attack.start_step = 3;
  attack.shift_scale = 0.4;
  attack.cover_up = false;
  set_attack(cfg, 5, attack);
  const RunResult r = Swarm(cfg).run();
  CHECK(r.ban_step_of(5) == 3);
  CHECK(count_cause(r, BanCause::AggregationFraud) == 1);
  CHECK_FALSE(honest_banned(cfg, r));
}

TEST_CASE("a far-out forged aggregate triggers re-aggregation and a ban") {
  SwarmConfig cfg = base_config(6, 12, 8);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::AggShift;
  attack.start_step = 3;
  attack.shift_scale = 10.0;  // far beyond delta_max: majority flags
  attack.cover_up = true;
  set_attack(cfg, 5, attack);
  TraceSink trace(cfg.hash_mode);
  const RunResult r = Swarm(cfg, &trace).run();
  CHECK(r.ban_step_of(5) == 3);
  std::uint32_t triggers = 0;
  for (const auto& m : r.metrics) triggers += m.check_averaging_triggers;
  CHECK(triggers >= 1);
  CHECK_FALSE(honest_banned(cfg, r));
  // The recovered value keeps training sane: loss still decreases overall.
  CHECK(r.metrics.back().loss < r.metrics.front().loss);
}

TEST_CASE("cross-sender reordering never changes the ledger") {
  SwarmConfig cfg = base_config(8, 16, 15);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::SignFlip;
  attack.start_step = 2;
  set_attack(cfg, 7, attack);
  AttackConfig slander;
  slander.kind = AttackConfig::Kind::Slander;
  slander.start_step = 2;
  set_attack(cfg, 6, slander);
  cfg.clip = ClipConfig::fixed(1.0);

  Digest expect{};
  Vec expect_x;
  for (std::uint64_t shuffle = 0; shuffle < 10; ++shuffle) {
    cfg.reorder_seed = shuffle * 7919;
    const RunResult r = Swarm(cfg).run();
    if (shuffle == 0) {
      expect = r.ledger_digest;
      expect_x = r.final_x;
    } else {
      CHECK(r.ledger_digest == expect);
      CHECK(r.final_x == expect_x);
    }
    CHECK(r.ledgers_agree());
  }
}

TEST_CASE("duplicate faults: identical resends harmless, contradictions ban") {
  SwarmConfig cfg = base_config(6, 12, 6);
  AttackConfig byz;  // a do-nothing Byzantine so the fault scope is legal
  byz.kind = AttackConfig::Kind::SignFlip;
  byz.start_step = 1000;
  set_attack(cfg, 5, byz);

  FaultSpec dup;
  dup.kind = FaultSpec::Kind::Duplicate;
  dup.from = 5;
  dup.msg_kind = MsgKind::AggHash;
  dup.step_from = 2;
  dup.step_to = 2;
  dup.mutate_payload = false;
  cfg.faults = {dup};
  const RunResult clean = Swarm(cfg).run();
  CHECK(clean.bans.empty());

  cfg.faults[0].mutate_payload = true;  // contradicting broadcast
  const RunResult banned = Swarm(cfg).run();
  CHECK(banned.ban_step_of(5) == 2);
  CHECK(count_cause(banned, BanCause::ProtocolViolation) == 1);
}

TEST_CASE("dropping a reveal aborts the round and bans the silent peer") {
  SwarmConfig cfg = base_config(6, 12, 6);
  AttackConfig byz;
  byz.kind = AttackConfig::Kind::SignFlip;
  byz.start_step = 1000;
  set_attack(cfg, 5, byz);
  FaultSpec drop;
  drop.kind = FaultSpec::Kind::Drop;
  drop.from = 5;
  drop.msg_kind = MsgKind::Reveal;
  drop.step_from = 3;
  drop.step_to = 3;
  cfg.faults = {drop};
  const RunResult r = Swarm(cfg).run();
  CHECK(r.ban_step_of(5) == 3);
  CHECK(r.metrics[3].mprng_restarts == 1);
  CHECK(r.metrics[3].active_peers == 6);  // ban lands at the step boundary
  CHECK(r.metrics[4].active_peers == 5);
  CHECK_FALSE(honest_banned(cfg, r));
}

TEST_CASE("an honest joiner earns trust and enters the roster") {
  SwarmConfig cfg = base_config(6, 12, 30);
  cfg.reputation_threshold = 3;
  cfg.joiners = {{5, 4}};  // peer 5 joins at step 4 as untrusted
  const RunResult r = Swarm(cfg).run();
  CHECK(r.bans.empty());
  CHECK(r.metrics.front().participants <= 5);
  // once trusted the roster grows back to sixaggregation participants
  bool grew = false;
  for (const auto& m : r.metrics)
    if (m.active_peers == 6) grew = true;
  CHECK(grew);
}

TEST_CASE("a joiner committing forged gradients is rejected") {
  SwarmConfig cfg = base_config(6, 12, 30);
  cfg.reputation_threshold = 5;
  cfg.joiners = {{5, 4}};
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::SignFlip;
  attack.start_step = 0;
  set_attack(cfg, 5, attack);
  const RunResult r = Swarm(cfg).run();
  REQUIRE(r.ban_step_of(5).has_value());
  CHECK(count_cause(r, BanCause::GradientFraud) == 1);
  // it never became a participant
  for (const auto& m : r.metrics) CHECK(m.active_peers <= 5 + 0u);
}

TEST_CASE("clipped variant: deviation filter follows the clip level") {
  SwarmConfig cfg = base_config(6, 12, 10);
  cfg.variant = SwarmConfig::Variant::Clipped;
  cfg.moment_bound = 1.0;
  cfg.domain.radius = 10.0;
  NoiseModel noise;
  noise.kind = NoiseModel::Kind::HeavyTail;
  noise.alpha = 1.5;
  noise.moment_scale = 1.0;
  cfg.objective = Objective::quadratic(12, 1.0, Vec(12, 0.0), noise);
  const RunResult r = Swarm(cfg).run();
  CHECK(r.bans.empty());
  CHECK(r.ledgers_agree());
  CHECK(std::isfinite(r.metrics.back().loss));
}

TEST_CASE("restart driver averages segments and continues") {
  SwarmConfig cfg = base_config(4, 8, 0);
  cfg.validators = 0;
  RestartSchedule sched;
  sched.restarts = 2;
  sched.gammas = {0.05, 0.05};
  sched.iters = {10, 10};
  const RestartRun rr = run_restarted(cfg, sched);
  REQUIRE(rr.restart_points.size() == 2);
  CHECK(norm(rr.restart_points[1]) < norm(rr.restart_points[0]));
  CHECK(rr.result.steps_run == 20);
}

TEST_CASE("config validation rejects out-of-contract setups") {
  SwarmConfig cfg = base_config(8, 16, 5);
  AttackConfig attack;
  attack.kind = AttackConfig::Kind::SignFlip;
  for (PeerId p = 4; p < 8; ++p) set_attack(cfg, p, attack);  // b = n/2
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  SwarmConfig small = base_config(8, 4, 5);  // d < n
  CHECK_THROWS_AS(small.validate(), ConfigError);

  SwarmConfig declared = base_config(8, 16, 5);
  set_attack(declared, 7, attack);
  set_attack(declared, 6, attack);
  declared.declared_attacker_count = true;
  declared.validators = 3;  // m > (n-2b)/2 = 2
  CHECK_THROWS_AS(declared.validate(), ConfigError);
  declared.validators = 2;
  declared.validate();
}

TEST_SUITE_END();
