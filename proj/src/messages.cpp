#include "stockade/messages.hpp"

#include <cstring>

namespace stockade {

namespace {

std::uint64_t read_u64(const Bytes& b, std::size_t off) {
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[off + k];
  return v;
}

double read_f64(const Bytes& b, std::size_t off) {
  const std::uint64_t bits = read_u64(b, off);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

const char* msg_kind_name(MsgKind kind) {
  switch (kind) {
    case MsgKind::PartHash: return "part_hash";
    case MsgKind::Part: return "part";
    case MsgKind::AggHash: return "agg_hash";
    case MsgKind::AggPart: return "agg_part";
    case MsgKind::Checksum: return "checksum";
    case MsgKind::Norm: return "norm";
    case MsgKind::CheckFlag: return "check_flag";
    case MsgKind::Commit: return "commit";
    case MsgKind::Reveal: return "reveal";
    case MsgKind::Accuse: return "accuse";
    case MsgKind::Eliminate: return "eliminate";
  }
  return "unknown";
}

Bytes Message::signed_bytes() const {
  Bytes out;
  out.reserve(26 + payload.size());
  out.push_back(kTagMessage);
  append_u64(out, step);
  append_u64(out, sender);
  out.push_back(static_cast<std::uint8_t>(kind));
  append_u64(out, payload.size());
  append_bytes(out, payload);
  return out;
}

Digest Message::digest(HashMode mode) const { return hash_bytes(mode, signed_bytes()); }

Message make_signed(HashMode mode, const KeyPair& kp, std::uint64_t step, PeerId sender,
                    MsgKind kind, Bytes payload) {
  Message m;
  m.step = step;
  m.sender = sender;
  m.kind = kind;
  m.payload = std::move(payload);
  m.signature = sign(mode, kp, m.signed_bytes());
  return m;
}

bool check_signature(HashMode mode, const std::array<std::uint8_t, 32>& pk, const Message& m) {
  return verify(mode, pk, m.signed_bytes(), m.signature);
}

Bytes payload_index_digest(std::uint64_t index, const Digest& d) {
  Bytes out;
  append_u64(out, index);
  append_bytes(out, d);
  return out;
}

Bytes payload_index_vector(std::uint64_t index, const Vec& v) {
  Bytes out;
  append_u64(out, index);
  append_u64(out, v.size());
  for (const double x : v) append_f64(out, x);
  return out;
}

Bytes payload_scalars(const Vec& values) {
  Bytes out;
  append_u64(out, values.size());
  for (const double x : values) append_f64(out, x);
  return out;
}

Bytes payload_flags(const std::vector<std::uint8_t>& flags) {
  Bytes out;
  append_u64(out, flags.size());
  out.insert(out.end(), flags.begin(), flags.end());
  return out;
}

Bytes payload_commit(std::uint32_t attempt, const Digest& d) {
  Bytes out;
  append_u64(out, attempt);
  append_bytes(out, d);
  return out;
}

Bytes payload_reveal(std::uint32_t attempt, const std::array<std::uint8_t, 32>& x,
                     const std::array<std::uint8_t, 32>& salt) {
  Bytes out;
  append_u64(out, attempt);
  append_bytes(out, x);
  append_bytes(out, salt);
  return out;
}

Bytes payload_accusation(PeerId target, std::uint64_t ref_step, ViolationReason reason) {
  Bytes out;
  append_u64(out, target);
  append_u64(out, ref_step);
  out.push_back(static_cast<std::uint8_t>(reason));
  return out;
}

std::optional<IndexDigest> parse_index_digest(const Bytes& p) {
  if (p.size() != 8 + 32) return std::nullopt;
  IndexDigest out;
  out.index = read_u64(p, 0);
  std::memcpy(out.digest.data(), p.data() + 8, 32);
  return out;
}

std::optional<IndexVector> parse_index_vector(const Bytes& p) {
  if (p.size() < 16) return std::nullopt;
  IndexVector out;
  out.index = read_u64(p, 0);
  const std::uint64_t len = read_u64(p, 8);
  if (p.size() != 16 + 8 * len) return std::nullopt;
  out.vector.resize(len);
  for (std::uint64_t c = 0; c < len; ++c) out.vector[c] = read_f64(p, 16 + 8 * c);
  return out;
}

std::optional<Vec> parse_scalars(const Bytes& p) {
  if (p.size() < 8) return std::nullopt;
  const std::uint64_t len = read_u64(p, 0);
  if (p.size() != 8 + 8 * len) return std::nullopt;
  Vec out(len);
  for (std::uint64_t c = 0; c < len; ++c) out[c] = read_f64(p, 8 + 8 * c);
  return out;
}

std::optional<std::vector<std::uint8_t>> parse_flags(const Bytes& p) {
  if (p.size() < 8) return std::nullopt;
  const std::uint64_t len = read_u64(p, 0);
  if (p.size() != 8 + len) return std::nullopt;
  return std::vector<std::uint8_t>(p.begin() + 8, p.end());
}

std::optional<CommitPayload> parse_commit(const Bytes& p) {
  if (p.size() != 8 + 32) return std::nullopt;
  CommitPayload out;
  out.attempt = static_cast<std::uint32_t>(read_u64(p, 0));
  std::memcpy(out.digest.data(), p.data() + 8, 32);
  return out;
}

std::optional<RevealPayload> parse_reveal(const Bytes& p) {
  if (p.size() != 8 + 64) return std::nullopt;
  RevealPayload out;
  out.attempt = static_cast<std::uint32_t>(read_u64(p, 0));
  std::memcpy(out.x.data(), p.data() + 8, 32);
  std::memcpy(out.salt.data(), p.data() + 40, 32);
  return out;
}

std::optional<AccusationPayload> parse_accusation(const Bytes& p) {
  if (p.size() != 17) return std::nullopt;
  AccusationPayload out;
  out.target = static_cast<PeerId>(read_u64(p, 0));
  out.ref_step = read_u64(p, 8);
  out.reason = static_cast<ViolationReason>(p[16]);
  return out;
}

}  // namespace stockade
