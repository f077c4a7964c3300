#include "stockade/rng.hpp"

#include <cmath>
#include <cstring>

namespace stockade {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t SeededStream::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGolden);
}

double SeededStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededStream::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 is kept away from zero so log() stays finite.
  double u1 = uniform01();
  double u2 = uniform01();
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t SeededStream::next_below(std::uint64_t n) {
  if (n == 0) throw DimensionError("next_below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % n;
  }
}

void SeededStream::fill_bytes(std::uint8_t* out, std::size_t len) {
  std::size_t done = 0;
  while (done < len) {
    std::uint64_t v = next_u64();
    const std::size_t take = std::min<std::size_t>(8, len - done);
    for (std::size_t i = 0; i < take; ++i) {
      out[done + i] = static_cast<std::uint8_t>(v & 0xFF);
      v >>= 8;
    }
    done += take;
  }
}

std::array<std::uint8_t, 32> SeededStream::next_block() {
  std::array<std::uint8_t, 32> out{};
  fill_bytes(out.data(), out.size());
  return out;
}

}  // namespace stockade
