#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "stockade/common.hpp"
#include "stockade/vecmath.hpp"

namespace stockade {

using Digest = std::array<std::uint8_t, 32>;

/// Crypto = SHA-256 + Ed25519. FastSim swaps both for a non-cryptographic
/// 128-bit mix behind the same interface; it exists for million-round
/// Monte-Carlo statistics and is never the default.
enum class HashMode : std::uint8_t { Crypto, FastSim };

Digest hash_bytes(HashMode mode, std::span<const std::uint8_t> data);
std::string hex(const Digest& d);

// --- canonical serialization -------------------------------------------------
//
// Injective, deterministic byte encoding (documented in docs/FORMATS.md):
// a 1-byte type tag, lengths as 8-byte little-endian unsigned integers,
// reals as IEEE-754 binary64 little-endian in index order.

constexpr std::uint8_t kTagVector = 0x01;
constexpr std::uint8_t kTagMessage = 0x02;
constexpr std::uint8_t kTagCommit = 0x03;

void append_u64(Bytes& out, std::uint64_t v);
void append_f64(Bytes& out, double v);
void append_bytes(Bytes& out, std::span<const std::uint8_t> data);

Bytes canonical_vector(const Vec& v);
Digest hash_vector(HashMode mode, const Vec& v);

// --- signatures ---------------------------------------------------------------

struct Signature {
  std::array<std::uint8_t, 64> bytes{};
  bool operator==(const Signature&) const = default;
};

struct KeyPair {
  std::array<std::uint8_t, 32> public_key{};
  std::array<std::uint8_t, 64> secret_key{};

  static KeyPair from_seed(HashMode mode, const std::array<std::uint8_t, 32>& seed);
};

Signature sign(HashMode mode, const KeyPair& kp, std::span<const std::uint8_t> msg);
bool verify(HashMode mode, const std::array<std::uint8_t, 32>& public_key,
            std::span<const std::uint8_t> msg, const Signature& sig);

// --- multi-party randomness ---------------------------------------------------

/// Commit-reveal coin tossing over a broadcast channel. Every participant
/// commits h(i || x_i || s_i) before any reveal is accepted; the output is
/// the XOR of all revealed x_i. A mismatching or missing reveal marks the
/// peer untrusted and aborts the session for a restart without that peer.
class MprngSession {
 public:
  enum class Phase : std::uint8_t { Commit, Reveal, Done, Aborted };

  MprngSession(HashMode mode, std::vector<PeerId> participants);

  Phase phase() const { return phase_; }
  const std::vector<PeerId>& participants() const { return participants_; }
  const std::vector<PeerId>& flagged() const { return flagged_; }

  static Digest commitment_digest(HashMode mode, PeerId peer,
                                  const std::array<std::uint8_t, 32>& x,
                                  const std::array<std::uint8_t, 32>& salt);

  /// Stores the peer's commitment; advances to Reveal once all are in.
  /// Returns false (and flags the peer) on duplicate or out-of-phase commits.
  bool commit(PeerId peer, const Digest& commitment);

  /// Validates the reveal against the stored commitment. A mismatch flags
  /// the peer and aborts the session. Once every participant has revealed,
  /// the phase becomes Done and output() is defined.
  bool reveal(PeerId peer, const std::array<std::uint8_t, 32>& x,
              const std::array<std::uint8_t, 32>& salt);

  /// Deadline for the given phase: flags everyone still missing and aborts
  /// if anyone is. A no-op when the session has already advanced past it.
  void close_phase(Phase which);

  const std::array<std::uint8_t, 32>& output() const;
  std::optional<Digest> commitment_of(PeerId peer) const;

 private:
  void flag(PeerId peer);

  HashMode mode_;
  std::vector<PeerId> participants_;
  Phase phase_ = Phase::Commit;
  std::map<PeerId, Digest> commitments_;
  std::map<PeerId, std::array<std::uint8_t, 32>> reveals_;
  std::vector<PeerId> flagged_;
  std::array<std::uint8_t, 32> output_{};
};

/// Purpose-separated sub-seed: hash(output || tag) truncated to 64 bits.
std::uint64_t derive(const std::array<std::uint8_t, 32>& output, std::string_view tag);
std::array<std::uint8_t, 32> derive_bytes(const std::array<std::uint8_t, 32>& output,
                                          std::string_view tag);

}  // namespace stockade
