#pragma once

#include <cstdint>
#include <optional>

#include "stockade/common.hpp"
#include "stockade/cryptokit.hpp"

namespace stockade {

/// Wire kinds of the per-round protocol. Byte layouts are documented in
/// docs/FORMATS.md and encoded canonically (tag, little-endian lengths,
/// IEEE-754 binary64 payloads).
enum class MsgKind : std::uint8_t {
  PartHash = 0,   // part index (UINT64_MAX = whole-gradient commitment), digest
  Part = 1,       // part index, vector payload
  AggHash = 2,    // part index, digest
  AggPart = 3,    // part index, vector payload
  Checksum = 4,   // per-partition inner products s_i^j, one f64 per partition
  Norm = 5,       // per-partition deviation norms, one f64 per partition
  CheckFlag = 6,  // per-partition 0/1 flags [norm > delta_max]
  Commit = 7,     // randomness attempt number, commitment digest
  Reveal = 8,     // randomness attempt number, x (32 bytes), salt (32 bytes)
  Accuse = 9,     // target, referenced step, reason code
  Eliminate = 10, // target, referenced step, reason code
};

const char* msg_kind_name(MsgKind kind);

constexpr std::uint64_t kFullGradientIndex = UINT64_MAX;

enum class ViolationReason : std::uint8_t {
  None = 0,
  HashMismatch = 1,     // payload contradicts a previously broadcast hash
  Timeout = 2,          // required transmission never arrived
  BadChecksum = 3,      // broadcast scalar inconsistent with held data
  ChecksumSumNonzero = 4,
  GradientReplay = 5,   // validator replay found committed hashes wrong
};

struct Message {
  std::uint64_t step = 0;
  PeerId sender = kNoPeer;
  MsgKind kind = MsgKind::PartHash;
  Bytes payload;
  Signature signature{};

  /// Canonical bytes covered by the signature.
  Bytes signed_bytes() const;
  Digest digest(HashMode mode) const;
};

Message make_signed(HashMode mode, const KeyPair& kp, std::uint64_t step, PeerId sender,
                    MsgKind kind, Bytes payload);
bool check_signature(HashMode mode, const std::array<std::uint8_t, 32>& pk, const Message& m);

// payload builders / parsers
Bytes payload_index_digest(std::uint64_t index, const Digest& d);
Bytes payload_index_vector(std::uint64_t index, const Vec& v);
Bytes payload_scalars(const Vec& values);
Bytes payload_flags(const std::vector<std::uint8_t>& flags);
Bytes payload_commit(std::uint32_t attempt, const Digest& d);
Bytes payload_reveal(std::uint32_t attempt, const std::array<std::uint8_t, 32>& x,
                     const std::array<std::uint8_t, 32>& salt);
Bytes payload_accusation(PeerId target, std::uint64_t ref_step, ViolationReason reason);

struct IndexDigest {
  std::uint64_t index;
  Digest digest;
};
struct IndexVector {
  std::uint64_t index;
  Vec vector;
};
struct CommitPayload {
  std::uint32_t attempt;
  Digest digest;
};
struct RevealPayload {
  std::uint32_t attempt;
  std::array<std::uint8_t, 32> x;
  std::array<std::uint8_t, 32> salt;
};
struct AccusationPayload {
  PeerId target;
  std::uint64_t ref_step;
  ViolationReason reason;
};

std::optional<IndexDigest> parse_index_digest(const Bytes& payload);
std::optional<IndexVector> parse_index_vector(const Bytes& payload);
std::optional<Vec> parse_scalars(const Bytes& payload);
std::optional<std::vector<std::uint8_t>> parse_flags(const Bytes& payload);
std::optional<CommitPayload> parse_commit(const Bytes& payload);
std::optional<RevealPayload> parse_reveal(const Bytes& payload);
std::optional<AccusationPayload> parse_accusation(const Bytes& payload);

}  // namespace stockade
