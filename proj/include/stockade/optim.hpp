#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stockade/common.hpp"
#include "stockade/rng.hpp"
#include "stockade/vecmath.hpp"

namespace stockade {

/// Stochastic-gradient noise attached to an objective.
///
/// Gaussian draws i.i.d. N(0, sigma^2/d) per coordinate, so every
/// s-dimensional subvector has noise variance s*sigma^2/d. HeavyTail places
/// a symmetrized Pareto spike on one uniformly chosen coordinate; the tail
/// index sits strictly between alpha and 2, so the alpha-th moment is
/// bounded by moment_scale^alpha for every subvector while the variance is
/// infinite.
struct NoiseModel {
  enum class Kind : std::uint8_t { None, Gaussian, HeavyTail };
  Kind kind = Kind::None;
  double sigma = 0.0;         // Gaussian
  double alpha = 1.5;         // HeavyTail: bounded alpha-th moment, in (1, 2]
  double moment_scale = 1.0;  // HeavyTail: per-draw alpha-moment bound

  Vec sample(std::size_t dim, SeededStream& stream) const;
  double pareto_tail_index() const { return (alpha + 2.0) / 2.0; }
};

struct Objective {
  enum class Kind : std::uint8_t { Quadratic, Logistic, Rastrigin };

  Kind kind = Kind::Quadratic;
  std::size_t dim = 1;
  NoiseModel noise;

  // Quadratic: f(x) = 0.5 * sum_c curvature[c] * (x[c] - x_star[c])^2
  Vec curvature;
  Vec x_star;

  // Logistic: synthetic dataset generated once from dataset_seed
  std::size_t dataset_size = 0;
  std::size_t batch_size = 0;
  std::uint64_t dataset_seed = 0;
  std::vector<Vec> features;
  std::vector<double> labels;  // +-1

  // Rastrigin-like: f(x) = sum_c [x_c^2 + ripple*(1 - cos(2*pi*x_c))]
  double ripple = 0.0;

  static Objective quadratic(std::size_t dim, double curvature, const Vec& x_star,
                             NoiseModel noise = {});
  static Objective quadratic_diag(Vec curvature, Vec x_star, NoiseModel noise = {});
  static Objective logistic(std::size_t dim, std::size_t samples, std::size_t batch,
                            std::uint64_t dataset_seed, NoiseModel noise = {});
  static Objective rastrigin(std::size_t dim, double ripple, NoiseModel noise = {});

  double value(const Vec& x) const;
  Vec full_gradient(const Vec& x) const;
  double optimum_value() const;  // analytic f* where known
  bool has_analytic_optimum() const;
  double smoothness() const;       // L
  double strong_convexity() const; // mu (0 if none)
};

/// Deterministic stochastic gradient: same (x, seed) gives identical bytes.
/// Gaussian/heavy-tail objectives add seeded noise to the full gradient;
/// the logistic objective samples a minibatch with the seed.
Vec compute_gradient(const Objective& obj, const Vec& x, std::uint64_t seed);

/// g * min{1, lambda/||g||}; a zero vector passes through unchanged.
Vec clip_gradient_part(std::span<const double> g, double lambda);

/// Euclidean-ball feasible set; radius 0 means all of R^d.
struct Domain {
  double radius = 0.0;
  Vec center;  // empty = origin

  Vec project(Vec x) const;
  bool bounded() const { return radius > 0.0; }
};

// --- published parameter formulas, evaluated verbatim -----------------------

/// min{1/(4L), sqrt(Delta0*n / (L*sigma^2*K))}
double stepsize_nonconvex(double L, double delta0, double n, double sigma, double K);

/// min{1/(4L), sqrt(7*n*R0^2/(120*sigma^2*K)), sqrt(m^2*R0^2/(1440*C*sigma^2*n^2*delta))}
double stepsize_convex_known(double L, double R0, double n, double m, double delta,
                             double sigma, double K);

/// Aggregation-quality constant 4001 + 4*((1+sqrt(3))^2 + 3).
double aggregation_constant_known();

/// Byzantine-part bound constant 4*((1+sqrt(3))^2 + 3).
double aggregation_constant_unknown();

/// (1 + sqrt(3)) * sqrt(2) * sigma / sqrt(n_active - m)
double delta_max_gaussian(double sigma, double n_active, double m);

/// lambda = G * K^(1/alpha)
double clipped_lambda(double G, double K, double alpha);

/// ceil(log2(mu*R0^2/eps)) - 1
int restart_count(double mu, double r0_sq, double eps);

/// Restart schedules for the strongly convex case with the per-restart
/// stepsize/iteration formulas; known_attacker_count toggles between the
/// delta- and b-dependent variants (delta = b/n).
struct RestartSchedule {
  int restarts = 0;
  std::vector<double> gammas;
  std::vector<long> iters;
};
RestartSchedule restart_schedule(double L, double mu, double R0, double sigma, double n,
                                 double m, double b, double eps, bool known_attacker_count);

}  // namespace stockade
