#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stockade/common.hpp"
#include "stockade/rng.hpp"

namespace stockade {

/// Deterministic n-way split of a d-dimensional vector: the first (d mod n)
/// parts have size ceil(d/n), the rest floor(d/n).
struct PartitionLayout {
  std::size_t dim = 0;
  std::size_t parts = 0;
  std::vector<std::size_t> offsets;  // parts + 1 entries, offsets[0] = 0

  static PartitionLayout make(std::size_t d, std::size_t n);

  std::size_t part_size(std::size_t j) const { return offsets[j + 1] - offsets[j]; }
  std::span<const double> slice(const Vec& v, std::size_t j) const;
  std::span<double> slice(Vec& v, std::size_t j) const;
};

std::vector<Vec> split(const Vec& v, std::size_t n);

/// Concatenates parts back into one vector, bit-exact. The part sizes must
/// follow the layout rule above; anything else is a LayoutError.
Vec merge(const std::vector<Vec>& parts);

/// Unit direction shared by all peers: fills the vector with gaussians from
/// the seeded stream, then normalizes each partition slice separately so
/// every slice is a unit-sphere sample of its own dimension.
Vec random_unit_direction(std::uint64_t seed, const PartitionLayout& layout);

// Reductions with a fixed left-to-right summation order, so that equal bytes
// in produce equal bytes out on every peer.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double norm_diff(std::span<const double> a, std::span<const double> b);

/// Arithmetic mean with left-to-right accumulation; the exact-average path of
/// the aggregation and the serial reference both call this.
Vec mean_vec(std::span<const Vec> inputs);

bool all_finite(const Vec& v);

}  // namespace stockade
