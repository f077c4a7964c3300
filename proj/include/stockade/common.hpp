#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stockade {

using Real = double;
using Vec = std::vector<double>;
using PeerId = std::uint32_t;
using Bytes = std::vector<std::uint8_t>;

constexpr PeerId kNoPeer = UINT32_MAX;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Vector length / part count violations.
struct DimensionError : Error {
  using Error::Error;
};

// Parts that do not conform to a single partition layout.
struct LayoutError : Error {
  using Error::Error;
};

// Operation invoked in the wrong protocol phase.
struct StateError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace stockade
