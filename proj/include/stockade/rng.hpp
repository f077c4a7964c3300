#pragma once

#include <array>
#include <cstdint>

#include "stockade/common.hpp"

namespace stockade {

/// Counter-based pseudo-random stream (splitmix64 chain).
///
/// The draw sequence is a pure function of the 64-bit seed: draw k is
/// mix(seed + (k+1)*GOLDEN). Integer draws are bit-exact on every platform.
/// Real-valued draws apply fixed transforms (53-bit mantissa uniforms,
/// Box-Muller gaussians); they are bit-exact within a build and depend only
/// on libm rounding across toolchains. Gradient replay and hash checks in
/// the protocol always run inside one build, where draws are bit-identical.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01();

  /// Standard normal via Box-Muller; draws come in deterministic pairs.
  double gaussian();

  /// Uniform integer in [0, n), rejection-sampled (n > 0).
  std::uint64_t next_below(std::uint64_t n);

  void fill_bytes(std::uint8_t* out, std::size_t len);
  std::array<std::uint8_t, 32> next_block();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stockade
