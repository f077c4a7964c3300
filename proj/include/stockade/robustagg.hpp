#pragma once

#include <span>
#include <utility>

#include "stockade/common.hpp"
#include "stockade/vecmath.hpp"

namespace stockade {

/// Robust-aggregation policy. FixedTau clips every input's deviation at a
/// constant radius. Schedule starts from B0^2 and follows
///   tau_l = 4*sqrt((1-delta)*(B_l^2/3 + sigma^2) / (sqrt(3)*delta)),
///   B_{l+1}^2 = 6.45*delta*B_l^2 + 5*sigma^2,
/// whose tau_l converge geometrically to a closed-form limit; the iteration
/// is converged against that limiting radius so the returned vector is a
/// fixed point of a single, well-defined clipping equation (the one the
/// inner-product checksums test). Infinite means no clipping: the exact
/// arithmetic mean, which is also the delta=0 route of the schedule.
struct ClipConfig {
  enum class Mode : std::uint8_t { FixedTau, Schedule, Infinite };

  Mode mode = Mode::Infinite;
  double tau = 0.0;       // FixedTau
  double delta = 0.0;     // Schedule
  double sigma = 0.0;     // Schedule
  double b0_sq = 0.0;     // Schedule
  double tol = 1e-6;
  int max_iters = 1000;

  static ClipConfig fixed(double tau, double tol = 1e-6, int max_iters = 1000);
  static ClipConfig schedule(double delta, double sigma, double b0_sq = 0.0,
                             double tol = 1e-6, int max_iters = 1000);
  static ClipConfig infinite();

  void validate() const;

  /// The clipping radius the converged output is a fixed point of:
  /// tau (FixedTau), the schedule limit (Schedule), or +inf (Infinite).
  double effective_tau() const;
};

struct ClipResult {
  Vec value;
  int iters = 0;
  double residual = 0.0;  // ||sum_i clipped_deviation(x_i, value)|| / n
};

/// min{1, tau/norm}; a non-finite norm clips to weight 0 so injected
/// NaN/Inf payloads cannot poison the arithmetic.
double clip_weight(double dev_norm, double tau);

/// (x - v) * min{1, tau/||x - v||}, zeros when the deviation is non-finite.
Vec clipped_deviation(const Vec& x, const Vec& v, double tau);

/// Fixed-point iteration v <- v + (1/n) sum_i clipped_deviation(x_i, v).
/// Returns the first iterate whose update step has norm <= tol, or the
/// max_iters one with the achieved residual. v0 defaults to the
/// coordinate-wise median of the inputs.
ClipResult centered_clip(std::span<const Vec> inputs, const ClipConfig& cfg,
                         const Vec* v0 = nullptr);

/// One schedule update: returns (tau_l, B_{l+1}^2) from (delta, sigma, B_l^2).
std::pair<double, double> tau_schedule_step(double delta, double sigma, double b_sq);

/// Limit of the B_l^2 recursion (requires 6.45*delta < 1).
double tau_schedule_limit(double delta, double sigma);

/// Per-coordinate median; even counts take the lower of the two middles.
Vec coordinate_median(std::span<const Vec> inputs);

/// Weiszfeld iteration run until the iterate moves less than tol.
Vec geometric_median(std::span<const Vec> inputs, double tol, int max_iters = 100000);

}  // namespace stockade
