#include "stockade/optim.hpp"

#include <cmath>

namespace stockade {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

Vec NoiseModel::sample(std::size_t dim, SeededStream& stream) const {
  Vec noise(dim, 0.0);
  switch (kind) {
    case Kind::None:
      break;
    case Kind::Gaussian: {
      const double scale = sigma / std::sqrt(static_cast<double>(dim));
      for (std::size_t c = 0; c < dim; ++c) noise[c] = scale * stream.gaussian();
      break;
    }
    case Kind::HeavyTail: {
      // One symmetrized Pareto draw on a random coordinate. Tail index
      // a = (alpha+2)/2 in (alpha, 2): E|X|^alpha = a*x_m^alpha/(a-alpha)
      // finite, E|X|^2 infinite. x_m calibrated so E|X|^alpha = scale^alpha.
      const double a = pareto_tail_index();
      const double x_m = moment_scale * std::pow((a - alpha) / a, 1.0 / alpha);
      const std::size_t coord = static_cast<std::size_t>(stream.next_below(dim));
      double u = stream.uniform01();
      if (u < 0x1.0p-53) u = 0x1.0p-53;
      const double magnitude = x_m * std::pow(u, -1.0 / a);
      const bool negative = (stream.next_u64() & 1) != 0;
      noise[coord] = negative ? -magnitude : magnitude;
      break;
    }
  }
  return noise;
}

Objective Objective::quadratic(std::size_t dim, double curvature, const Vec& x_star,
                               NoiseModel noise) {
  Objective obj;
  obj.kind = Kind::Quadratic;
  obj.dim = dim;
  obj.curvature.assign(dim, curvature);
  obj.x_star = x_star.empty() ? Vec(dim, 0.0) : x_star;
  if (obj.x_star.size() != dim) throw ConfigError("objective: x_star length mismatch");
  obj.noise = noise;
  return obj;
}

Objective Objective::quadratic_diag(Vec curvature, Vec x_star, NoiseModel noise) {
  Objective obj;
  obj.kind = Kind::Quadratic;
  obj.dim = curvature.size();
  obj.curvature = std::move(curvature);
  obj.x_star = std::move(x_star);
  if (obj.x_star.size() != obj.dim) throw ConfigError("objective: x_star length mismatch");
  obj.noise = noise;
  return obj;
}

Objective Objective::logistic(std::size_t dim, std::size_t samples, std::size_t batch,
                              std::uint64_t dataset_seed, NoiseModel noise) {
  if (batch == 0 || batch > samples) throw ConfigError("objective: bad batch size");
  Objective obj;
  obj.kind = Kind::Logistic;
  obj.dim = dim;
  obj.dataset_size = samples;
  obj.batch_size = batch;
  obj.dataset_seed = dataset_seed;
  obj.noise = noise;

  // Fixed synthetic dataset: gaussian features, labels from a planted
  // weight vector with 10% label noise.
  SeededStream stream(dataset_seed);
  Vec planted(dim);
  for (auto& w : planted) w = stream.gaussian();
  obj.features.resize(samples);
  obj.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    obj.features[i].resize(dim);
    for (auto& f : obj.features[i]) f = stream.gaussian() / std::sqrt(static_cast<double>(dim));
    const double margin = dot(obj.features[i], planted);
    double y = margin >= 0.0 ? 1.0 : -1.0;
    if (stream.uniform01() < 0.1) y = -y;
    obj.labels[i] = y;
  }
  return obj;
}

Objective Objective::rastrigin(std::size_t dim, double ripple, NoiseModel noise) {
  Objective obj;
  obj.kind = Kind::Rastrigin;
  obj.dim = dim;
  obj.ripple = ripple;
  obj.x_star = Vec(dim, 0.0);
  obj.noise = noise;
  return obj;
}

double Objective::value(const Vec& x) const {
  switch (kind) {
    case Kind::Quadratic: {
      double acc = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = x[c] - x_star[c];
        acc += 0.5 * curvature[c] * d * d;
      }
      return acc;
    }
    case Kind::Logistic: {
      double acc = 0.0;
      for (std::size_t i = 0; i < dataset_size; ++i) {
        const double margin = labels[i] * dot(features[i], x);
        acc += std::log1p(std::exp(-margin));
      }
      return acc / static_cast<double>(dataset_size);
    }
    case Kind::Rastrigin:
    default: {
      double acc = 0.0;
      for (std::size_t c = 0; c < dim; ++c)
        acc += x[c] * x[c] + ripple * (1.0 - std::cos(kTwoPi * x[c]));
      return acc;
    }
  }
}

Vec Objective::full_gradient(const Vec& x) const {
  Vec g(dim, 0.0);
  switch (kind) {
    case Kind::Quadratic:
      for (std::size_t c = 0; c < dim; ++c) g[c] = curvature[c] * (x[c] - x_star[c]);
      break;
    case Kind::Logistic:
      for (std::size_t i = 0; i < dataset_size; ++i) {
        const double margin = labels[i] * dot(features[i], x);
        const double coeff = -labels[i] / (1.0 + std::exp(margin));
        for (std::size_t c = 0; c < dim; ++c) g[c] += coeff * features[i][c];
      }
      for (double& v : g) v /= static_cast<double>(dataset_size);
      break;
    case Kind::Rastrigin:
      for (std::size_t c = 0; c < dim; ++c)
        g[c] = 2.0 * x[c] + ripple * kTwoPi * std::sin(kTwoPi * x[c]);
      break;
  }
  return g;
}

bool Objective::has_analytic_optimum() const { return kind != Kind::Logistic; }

double Objective::optimum_value() const {
  switch (kind) {
    case Kind::Quadratic:
    case Kind::Rastrigin:
      return 0.0;
    case Kind::Logistic:
    default:
      throw StateError("objective: no analytic optimum");
  }
}

double Objective::smoothness() const {
  switch (kind) {
    case Kind::Quadratic: {
      double L = 0.0;
      for (const double c : curvature) L = std::max(L, c);
      return L;
    }
    case Kind::Logistic: {
      double max_sq = 0.0;
      for (const auto& f : features) {
        const double n = norm(f);
        max_sq = std::max(max_sq, n * n);
      }
      return 0.25 * max_sq;
    }
    case Kind::Rastrigin:
    default:
      return 2.0 + ripple * kTwoPi * kTwoPi;
  }
}

double Objective::strong_convexity() const {
  if (kind != Kind::Quadratic) return 0.0;
  double mu = curvature.empty() ? 0.0 : curvature[0];
  for (const double c : curvature) mu = std::min(mu, c);
  return mu;
}

Vec compute_gradient(const Objective& obj, const Vec& x, std::uint64_t seed) {
  if (x.size() != obj.dim) throw DimensionError("compute_gradient: dimension mismatch");
  SeededStream stream(seed);
  if (obj.kind == Objective::Kind::Logistic) {
    Vec g(obj.dim, 0.0);
    for (std::size_t k = 0; k < obj.batch_size; ++k) {
      const std::size_t i = static_cast<std::size_t>(stream.next_below(obj.dataset_size));
      const double margin = obj.labels[i] * dot(obj.features[i], x);
      const double coeff = -obj.labels[i] / (1.0 + std::exp(margin));
      for (std::size_t c = 0; c < obj.dim; ++c) g[c] += coeff * obj.features[i][c];
    }
    for (double& v : g) v /= static_cast<double>(obj.batch_size);
    return g;
  }
  Vec g = obj.full_gradient(x);
  if (obj.noise.kind != NoiseModel::Kind::None) {
    const Vec noise = obj.noise.sample(obj.dim, stream);
    for (std::size_t c = 0; c < obj.dim; ++c) g[c] += noise[c];
  }
  return g;
}

Vec clip_gradient_part(std::span<const double> g, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("clip_gradient_part: lambda must be positive");
  Vec out(g.begin(), g.end());
  const double n = norm(g);
  if (n > lambda && std::isfinite(n)) {
    const double w = lambda / n;
    for (double& v : out) v *= w;
  }
  return out;
}

Vec Domain::project(Vec x) const {
  if (!bounded()) return x;
  const Vec& c0 = center;
  double acc = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double d = x[c] - (c0.empty() ? 0.0 : c0[c]);
    acc += d * d;
  }
  const double n = std::sqrt(acc);
  if (n <= radius) return x;
  const double w = radius / n;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double ctr = c0.empty() ? 0.0 : c0[c];
    x[c] = ctr + (x[c] - ctr) * w;
  }
  return x;
}

double stepsize_nonconvex(double L, double delta0, double n, double sigma, double K) {
  const double a = 1.0 / (4.0 * L);
  if (sigma == 0.0) return a;
  return std::min(a, std::sqrt(delta0 * n / (L * sigma * sigma * K)));
}

double aggregation_constant_known() {
  const double s3 = std::sqrt(3.0);
  return 4001.0 + 4.0 * ((1.0 + s3) * (1.0 + s3) + 3.0);
}

double aggregation_constant_unknown() {
  const double s3 = std::sqrt(3.0);
  return 4.0 * ((1.0 + s3) * (1.0 + s3) + 3.0);
}

double stepsize_convex_known(double L, double R0, double n, double m, double delta,
                             double sigma, double K) {
  double g = 1.0 / (4.0 * L);
  if (sigma > 0.0)
    g = std::min(g, std::sqrt(7.0 * n * R0 * R0 / (120.0 * sigma * sigma * K)));
  if (sigma > 0.0 && delta > 0.0)
    g = std::min(g, std::sqrt(m * m * R0 * R0 /
                              (1440.0 * aggregation_constant_known() * sigma * sigma * n * n * delta)));
  return g;
}

double delta_max_gaussian(double sigma, double n_active, double m) {
  return (1.0 + std::sqrt(3.0)) * std::sqrt(2.0) * sigma / std::sqrt(n_active - m);
}

double clipped_lambda(double G, double K, double alpha) {
  if (!(alpha > 1.0) || alpha > 2.0) throw ConfigError("clipped lambda: alpha must be in (1, 2]");
  return G * std::pow(K, 1.0 / alpha);
}

int restart_count(double mu, double r0_sq, double eps) {
  const double ratio = mu * r0_sq / eps;
  return static_cast<int>(std::ceil(std::log2(ratio))) - 1;
}

RestartSchedule restart_schedule(double L, double mu, double R0, double sigma, double n,
                                 double m, double b, double eps, bool known_attacker_count) {
  RestartSchedule sched;
  sched.restarts = std::max(restart_count(mu, R0 * R0, eps), 0);
  const double C = aggregation_constant_known();
  const double delta = b / n;
  for (int t = 1; t <= sched.restarts; ++t) {
    const double two_t = std::pow(2.0, t);
    double K = 16.0 * L / mu;
    if (sigma > 0.0) K = std::max(K, 32.0 * sigma * sigma * two_t / (mu * mu * R0 * R0));
    if (b > 0.0) {
      if (known_attacker_count)
        K = std::max(K, 48.0 * std::sqrt(10.0 * C) * n * std::sqrt(delta) * sigma *
                            std::pow(2.0, t / 2.0) / (m * mu * R0));
      else
        K = std::max(K, 24.0 * std::sqrt(2.0 * C) * n * b * sigma * std::pow(2.0, t / 2.0) /
                            (m * mu * R0));
    }
    const long Kt = static_cast<long>(std::ceil(K));
    double g = 1.0 / (4.0 * L);
    if (sigma > 0.0)
      g = std::min(g, std::sqrt(7.0 * n * R0 * R0 /
                                (120.0 * two_t * sigma * sigma * static_cast<double>(Kt))));
    if (b > 0.0 && sigma > 0.0) {
      if (known_attacker_count)
        g = std::min(g, std::sqrt(m * m * R0 * R0 /
                                  (1440.0 * two_t * C * sigma * sigma * n * n * delta)));
      else
        g = std::min(g, std::sqrt(m * m * R0 * R0 /
                                  (72.0 * two_t * C * sigma * sigma * n * n * b * b)));
    }
    sched.iters.push_back(Kt);
    sched.gammas.push_back(g);
  }
  return sched;
}

}  // namespace stockade
