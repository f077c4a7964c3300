#include "stockade/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "stockade/cryptokit.hpp"
#include "stockade/rng.hpp"

namespace stockade {

namespace {

std::uint64_t step_seed(const AttackContext& ctx, std::uint64_t salt) {
  Bytes buf;
  append_u64(buf, ctx.attack_seed);
  append_u64(buf, ctx.step);
  append_u64(buf, salt);
  const Digest d = hash_bytes(HashMode::Crypto, buf);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | d[k];
  return v;
}

Objective wrong_objective(const Objective& obj) {
  Objective wrong = obj;
  switch (obj.kind) {
    case Objective::Kind::Quadratic:
    case Objective::Kind::Rastrigin:
      for (double& v : wrong.x_star) v = -v;
      break;
    case Objective::Kind::Logistic:
      for (double& y : wrong.labels) y = -y;  // label flipping
      break;
  }
  return wrong;
}

Vec little_is_enough(const AttackContext& ctx) {
  const std::size_t dim = ctx.own_true_gradient->size();
  const auto& honest = ctx.honest_gradients;
  Vec forged(dim, 0.0);
  for (std::size_t c = 0; c < dim; ++c) {
    double mean = 0.0, lo = honest[0][c], hi = honest[0][c];
    for (const Vec& g : honest) {
      mean += g[c];
      lo = std::min(lo, g[c]);
      hi = std::max(hi, g[c]);
    }
    mean /= static_cast<double>(honest.size());
    // Largest admissible offset: the endpoint of the honest range on the
    // side that opposes the descent direction. Values never leave the
    // population spread, yet with enough colluders the coordinate-wise
    // median lands on them.
    forged[c] = (mean > 0.0) ? lo : hi;
  }
  return forged;
}

}  // namespace

bool AttackConfig::active_at(std::uint64_t step) const {
  if (kind == Kind::Honest || step < start_step) return false;
  if (period == 0) return true;
  return (step - start_step) % period == 0;
}

Vec forge_gradient(const AttackConfig& attack, const AttackContext& ctx) {
  const Vec& truth = *ctx.own_true_gradient;
  if (!attack.active_at(ctx.step)) return truth;
  switch (attack.kind) {
    case AttackConfig::Kind::SignFlip: {
      Vec out(truth.size());
      for (std::size_t c = 0; c < truth.size(); ++c) out[c] = -attack.lambda * truth[c];
      return out;
    }
    case AttackConfig::Kind::RandomDirection: {
      const PartitionLayout whole = PartitionLayout::make(truth.size(), 1);
      Vec out = random_unit_direction(step_seed(ctx, 0xD1), whole);
      for (double& v : out) v *= attack.lambda;
      return out;
    }
    case AttackConfig::Kind::WrongObjective:
      return compute_gradient(wrong_objective(*ctx.objective), *ctx.x, ctx.own_seed);
    case AttackConfig::Kind::DelayedGradient: {
      if (ctx.step < ctx.first_step + attack.lag) return truth;  // lag not accumulated yet
      const std::size_t idx = static_cast<std::size_t>(ctx.step - attack.lag - ctx.first_step);
      if (!ctx.own_history || idx >= ctx.own_history->size()) return truth;
      return (*ctx.own_history)[idx];
    }
    case AttackConfig::Kind::InnerProductManipulation: {
      if (ctx.honest_gradients.empty()) return truth;
      Vec out = mean_vec(ctx.honest_gradients);
      for (double& v : out) v *= -attack.epsilon;
      return out;
    }
    case AttackConfig::Kind::LittleIsEnough:
      if (ctx.honest_gradients.empty()) return truth;
      return little_is_enough(ctx);
    default:
      // Aggregation / reputation / availability attacks send true gradients.
      return truth;
  }
}

Vec forge_aggregate(const AttackConfig& attack, const AttackContext& ctx,
                    const Vec& true_clip, std::uint64_t partition, double delta_max) {
  if (attack.kind != AttackConfig::Kind::AggShift || !attack.active_at(ctx.step))
    return true_clip;
  if (!(delta_max > 0.0)) return true_clip;
  const PartitionLayout whole = PartitionLayout::make(true_clip.size(), 1);
  const Vec dir = random_unit_direction(step_seed(ctx, 0xA6 + partition), whole);
  Vec out = true_clip;
  const double magnitude = attack.shift_scale * delta_max;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += magnitude * dir[c];
  return out;
}

}  // namespace stockade
