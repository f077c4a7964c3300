#pragma once

#include <cstdint>
#include <span>

#include "stockade/common.hpp"
#include "stockade/optim.hpp"
#include "stockade/vecmath.hpp"

namespace stockade {

/// Byzantine behavior assigned to a peer. Attackers are omniscient within a
/// step (they see all honest gradients before acting) and coordinate through
/// a shared per-step seed, but never hold honest secret keys or pre-reveal
/// randomness.
struct AttackConfig {
  enum class Kind : std::uint8_t {
    Honest = 0,
    SignFlip,                  // -lambda * true gradient
    RandomDirection,           // lambda * u, u shared across attackers per step
    WrongObjective,            // plausible gradient of a wrong target (label-flip analog)
    DelayedGradient,           // own true gradient from `lag` steps ago
    InnerProductManipulation,  // -epsilon * mean(honest gradients)
    LittleIsEnough,            // coordinate-wise median shift inside the honest range
    AggShift,                  // forged aggregate on the attacker's own partition
    Slander,                   // accuse an honest peer without evidence
    EliminateAbuse,            // spend mutual eliminations on honest peers
    SilentDrop,                // withhold gradient parts from honest aggregators
  };

  Kind kind = Kind::Honest;
  std::uint64_t start_step = 0;
  std::uint64_t period = 0;  // 0: every step from start; T: at start + k*T only
  double lambda = 1000.0;
  double epsilon = 0.1;
  std::uint64_t lag = 1000;
  double shift_scale = 0.5;  // AggShift magnitude in multiples of delta_max
  bool cover_up = true;      // AggShift: misreport own checksum to re-zero the sum

  bool byzantine() const { return kind != Kind::Honest; }
  bool active_at(std::uint64_t step) const;
};

struct AttackContext {
  std::uint64_t step = 0;
  std::uint64_t attack_seed = 0;  // run-level seed shared by all attackers
  const Objective* objective = nullptr;
  const Vec* x = nullptr;
  std::uint64_t own_seed = 0;
  const Vec* own_true_gradient = nullptr;
  std::span<const Vec> honest_gradients;      // current step, omniscience
  const std::vector<Vec>* own_history = nullptr;  // true gradients since run start
  std::uint64_t first_step = 0;
};

/// The gradient the attacker commits and sends this step.
Vec forge_gradient(const AttackConfig& attack, const AttackContext& ctx);

/// Forged aggregate for the attacker's own partition: the honest CenteredClip
/// output displaced by shift_scale * delta_max along a shared pseudo-random
/// direction (deterministic in (attack seed, step, partition)).
Vec forge_aggregate(const AttackConfig& attack, const AttackContext& ctx,
                    const Vec& true_clip, std::uint64_t partition, double delta_max);

}  // namespace stockade
