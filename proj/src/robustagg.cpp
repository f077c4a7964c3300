#include "stockade/robustagg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stockade {

ClipConfig ClipConfig::fixed(double tau, double tol, int max_iters) {
  ClipConfig cfg;
  cfg.mode = Mode::FixedTau;
  cfg.tau = tau;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.validate();
  return cfg;
}

ClipConfig ClipConfig::schedule(double delta, double sigma, double b0_sq, double tol,
                                int max_iters) {
  ClipConfig cfg;
  cfg.mode = Mode::Schedule;
  cfg.delta = delta;
  cfg.sigma = sigma;
  cfg.b0_sq = b0_sq;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.validate();
  return cfg;
}

ClipConfig ClipConfig::infinite() {
  ClipConfig cfg;
  cfg.mode = Mode::Infinite;
  return cfg;
}

void ClipConfig::validate() const {
  switch (mode) {
    case Mode::FixedTau:
      if (!(tau > 0.0)) throw ConfigError("clip: tau must be positive");
      break;
    case Mode::Schedule:
      if (!(delta > 0.0) || delta >= 0.5)
        throw ConfigError("clip: schedule needs 0 < delta < 0.5 (use Infinite for delta = 0)");
      if (sigma < 0.0) throw ConfigError("clip: sigma must be non-negative");
      if (b0_sq < 0.0) throw ConfigError("clip: B0^2 must be non-negative");
      break;
    case Mode::Infinite:
      break;
  }
  if (mode != Mode::Infinite && !(tol > 0.0)) throw ConfigError("clip: tol must be positive");
}

double ClipConfig::effective_tau() const {
  switch (mode) {
    case Mode::FixedTau:
      return tau;
    case Mode::Schedule:
      return tau_schedule_limit(delta, sigma);
    case Mode::Infinite:
    default:
      return std::numeric_limits<double>::infinity();
  }
}

double clip_weight(double dev_norm, double tau) {
  if (!std::isfinite(dev_norm)) return 0.0;
  if (std::isinf(tau) || dev_norm <= tau) return 1.0;
  return tau / dev_norm;
}

Vec clipped_deviation(const Vec& x, const Vec& v, double tau) {
  Vec dev(v.size(), 0.0);
  double acc = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c) {
    dev[c] = x[c] - v[c];
    acc += dev[c] * dev[c];
  }
  const double n = std::sqrt(acc);
  if (!std::isfinite(n)) {
    std::fill(dev.begin(), dev.end(), 0.0);
    return dev;
  }
  const double w = clip_weight(n, tau);
  if (w != 1.0)
    for (double& d : dev) d *= w;
  return dev;
}

namespace {

// Residual of eq. sum_i (x_i - v) min{1, tau/||x_i - v||} = 0 at v, as the
// update step (1/n) * sum. Returns the step vector and its norm.
std::pair<Vec, double> clip_step(std::span<const Vec> inputs, const Vec& v, double tau) {
  Vec sum(v.size(), 0.0);
  for (const Vec& x : inputs) {
    const Vec dev = clipped_deviation(x, v, tau);
    for (std::size_t c = 0; c < v.size(); ++c) sum[c] += dev[c];
  }
  const double inv = 1.0 / static_cast<double>(inputs.size());
  for (double& s : sum) s *= inv;
  return {std::move(sum), norm(sum)};
}

}  // namespace

ClipResult centered_clip(std::span<const Vec> inputs, const ClipConfig& cfg, const Vec* v0) {
  if (inputs.empty()) throw DimensionError("centered_clip: empty input");
  const std::size_t dim = inputs[0].size();
  for (const Vec& x : inputs)
    if (x.size() != dim) throw DimensionError("centered_clip: length mismatch");
  cfg.validate();

  if (cfg.mode == ClipConfig::Mode::Infinite) {
    ClipResult res;
    res.value = mean_vec(inputs);
    res.iters = 1;
    res.residual = clip_step(inputs, res.value, std::numeric_limits<double>::infinity()).second;
    if (!all_finite(res.value)) throw Error("centered_clip: non-finite mean");
    return res;
  }

  ClipResult res;
  res.value = v0 ? *v0 : coordinate_median(inputs);

  const double tau_limit = cfg.effective_tau();
  double b_sq = cfg.b0_sq;
  for (res.iters = 0; res.iters < cfg.max_iters; ++res.iters) {
    double tau_l = tau_limit;
    if (cfg.mode == ClipConfig::Mode::Schedule) {
      const auto [t, next_b] = tau_schedule_step(cfg.delta, cfg.sigma, b_sq);
      // Once the schedule radius has numerically met its limit, iterate with
      // the limit itself so the convergence test matches the checksum radius.
      tau_l = (std::abs(t - tau_limit) <= 1e-12 * std::max(1.0, tau_limit)) ? tau_limit : t;
      b_sq = next_b;
    }
    auto [step, step_norm] = clip_step(inputs, res.value, tau_l);
    if (tau_l == tau_limit && step_norm <= cfg.tol) {
      res.residual = step_norm;
      if (!all_finite(res.value)) throw Error("centered_clip: non-finite result");
      return res;
    }
    for (std::size_t c = 0; c < dim; ++c) res.value[c] += step[c];
  }
  res.residual = clip_step(inputs, res.value, tau_limit).second;
  if (!all_finite(res.value)) throw Error("centered_clip: non-finite result");
  return res;
}

std::pair<double, double> tau_schedule_step(double delta, double sigma, double b_sq) {
  if (!(delta > 0.0) || delta >= 0.5)
    throw ConfigError("tau schedule undefined for delta outside (0, 0.5)");
  if (sigma < 0.0) throw ConfigError("tau schedule: sigma must be non-negative");
  const double tau =
      4.0 * std::sqrt((1.0 - delta) * (b_sq / 3.0 + sigma * sigma) / (std::sqrt(3.0) * delta));
  const double next_b_sq = 6.45 * delta * b_sq + 5.0 * sigma * sigma;
  return {tau, next_b_sq};
}

double tau_schedule_limit(double delta, double sigma) {
  if (!(delta > 0.0) || delta >= 0.5)
    throw ConfigError("tau schedule undefined for delta outside (0, 0.5)");
  const double contraction = 6.45 * delta;
  if (contraction >= 1.0) throw ConfigError("tau schedule diverges: 6.45*delta >= 1");
  const double b_inf_sq = 5.0 * sigma * sigma / (1.0 - contraction);
  return 4.0 * std::sqrt((1.0 - delta) * (b_inf_sq / 3.0 + sigma * sigma) /
                         (std::sqrt(3.0) * delta));
}

Vec coordinate_median(std::span<const Vec> inputs) {
  if (inputs.empty()) throw DimensionError("coordinate_median: empty input");
  const std::size_t dim = inputs[0].size();
  Vec out(dim);
  std::vector<double> column(inputs.size());
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < inputs.size(); ++i) column[i] = inputs[i][c];
    // lower middle for even counts, keeps the result one of the input values
    const std::size_t k = (inputs.size() - 1) / 2;
    std::nth_element(column.begin(), column.begin() + k, column.end());
    out[c] = column[k];
  }
  return out;
}

Vec geometric_median(std::span<const Vec> inputs, double tol, int max_iters) {
  if (inputs.empty()) throw DimensionError("geometric_median: empty input");
  Vec y = coordinate_median(inputs);
  const std::size_t dim = y.size();
  for (int it = 0; it < max_iters; ++it) {
    Vec num(dim, 0.0);
    double den = 0.0;
    for (const Vec& x : inputs) {
      const double d = norm_diff(x, y);
      if (d < 1e-15) continue;  // Weiszfeld singularity: drop the coincident point
      const double w = 1.0 / d;
      for (std::size_t c = 0; c < dim; ++c) num[c] += w * x[c];
      den += w;
    }
    if (den == 0.0) return y;  // all inputs identical
    Vec next(dim);
    for (std::size_t c = 0; c < dim; ++c) next[c] = num[c] / den;
    const double moved = norm_diff(next, y);
    y = std::move(next);
    if (moved <= tol) break;
  }
  return y;
}

}  // namespace stockade
