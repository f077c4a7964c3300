#include "stockade/vecmath.hpp"

#include <cmath>

namespace stockade {

PartitionLayout PartitionLayout::make(std::size_t d, std::size_t n) {
  if (n < 1) throw DimensionError("partition: part count must be >= 1");
  if (d < n) throw DimensionError("partition: dimension smaller than part count");
  PartitionLayout layout;
  layout.dim = d;
  layout.parts = n;
  layout.offsets.resize(n + 1);
  const std::size_t big = (d + n - 1) / n;   // ceil(d/n)
  const std::size_t small = d / n;           // floor(d/n)
  const std::size_t n_big = d % n;           // first d mod n parts are big
  std::size_t off = 0;
  for (std::size_t j = 0; j < n; ++j) {
    layout.offsets[j] = off;
    off += (j < n_big) ? big : small;
  }
  layout.offsets[n] = off;
  return layout;
}

std::span<const double> PartitionLayout::slice(const Vec& v, std::size_t j) const {
  return {v.data() + offsets[j], part_size(j)};
}

std::span<double> PartitionLayout::slice(Vec& v, std::size_t j) const {
  return {v.data() + offsets[j], part_size(j)};
}

std::vector<Vec> split(const Vec& v, std::size_t n) {
  const PartitionLayout layout = PartitionLayout::make(v.size(), n);
  std::vector<Vec> parts(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto s = layout.slice(v, j);
    parts[j].assign(s.begin(), s.end());
  }
  return parts;
}

Vec merge(const std::vector<Vec>& parts) {
  if (parts.empty()) throw LayoutError("merge: empty part list");
  std::size_t d = 0;
  for (const auto& p : parts) d += p.size();
  const PartitionLayout layout = PartitionLayout::make(d, parts.size());
  Vec out;
  out.reserve(d);
  for (std::size_t j = 0; j < parts.size(); ++j) {
    if (parts[j].size() != layout.part_size(j))
      throw LayoutError("merge: part sizes violate the split rule");
    out.insert(out.end(), parts[j].begin(), parts[j].end());
  }
  return out;
}

Vec random_unit_direction(std::uint64_t seed, const PartitionLayout& layout) {
  SeededStream stream(seed);
  Vec z(layout.dim);
  for (std::size_t c = 0; c < layout.dim; ++c) z[c] = stream.gaussian();
  for (std::size_t j = 0; j < layout.parts; ++j) {
    auto s = layout.slice(z, j);
    const double n = norm(s);
    if (n == 0.0) {
      s[0] = 1.0;  // measure-zero degenerate slice
      continue;
    }
    for (double& x : s) x /= n;
  }
  return z;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) {
  double acc = 0.0;
  for (const double x : a) acc += x * x;
  return std::sqrt(acc);
}

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

Vec mean_vec(std::span<const Vec> inputs) {
  if (inputs.empty()) throw DimensionError("mean: empty input");
  Vec acc(inputs[0].size(), 0.0);
  for (const Vec& v : inputs) {
    if (v.size() != acc.size()) throw DimensionError("mean: length mismatch");
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += v[c];
  }
  const double inv = 1.0 / static_cast<double>(inputs.size());
  for (double& x : acc) x *= inv;
  return acc;
}

bool all_finite(const Vec& v) {
  for (const double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace stockade
