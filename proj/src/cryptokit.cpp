#include "stockade/cryptokit.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>
#include <mutex>

namespace stockade {

namespace {

void ensure_sodium() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
  });
}

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Non-cryptographic 128-bit absorb, widened to 32 output bytes. Collision
// resistance is irrelevant in fast-sim mode; speed and determinism are.
Digest fast_hash(std::span<const std::uint8_t> data) {
  std::uint64_t a = 0x6A09E667F3BCC908ULL ^ data.size();
  std::uint64_t b = 0xBB67AE8584CAA73BULL;
  std::size_t i = 0;
  while (i + 8 <= data.size()) {
    std::uint64_t chunk = 0;
    for (int k = 7; k >= 0; --k) chunk = (chunk << 8) | data[i + k];
    a = mix64(a ^ chunk);
    b = mix64(b + chunk + 0x9E3779B97F4A7C15ULL);
    i += 8;
  }
  std::uint64_t tail = 0;
  for (std::size_t k = 0; i + k < data.size(); ++k)
    tail |= static_cast<std::uint64_t>(data[i + k]) << (8 * k);
  a = mix64(a ^ tail);
  b = mix64(b + tail + 0x9E3779B97F4A7C15ULL);

  Digest out{};
  const std::uint64_t words[4] = {a, b, mix64(a + b), mix64(a ^ (b << 1 | b >> 63))};
  for (int w = 0; w < 4; ++w)
    for (int k = 0; k < 8; ++k)
      out[w * 8 + k] = static_cast<std::uint8_t>(words[w] >> (8 * k));
  return out;
}

}  // namespace

Digest hash_bytes(HashMode mode, std::span<const std::uint8_t> data) {
  if (mode == HashMode::FastSim) return fast_hash(data);
  ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

std::string hex(const Digest& d) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint8_t b : d) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}

void append_u64(Bytes& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void append_f64(Bytes& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  append_u64(out, bits);
}

void append_bytes(Bytes& out, std::span<const std::uint8_t> data) {
  out.insert(out.end(), data.begin(), data.end());
}

Bytes canonical_vector(const Vec& v) {
  Bytes out;
  out.reserve(9 + 8 * v.size());
  out.push_back(kTagVector);
  append_u64(out, v.size());
  for (const double x : v) append_f64(out, x);
  return out;
}

Digest hash_vector(HashMode mode, const Vec& v) {
  return hash_bytes(mode, canonical_vector(v));
}

KeyPair KeyPair::from_seed(HashMode mode, const std::array<std::uint8_t, 32>& seed) {
  KeyPair kp;
  if (mode == HashMode::FastSim) {
    // Recognition-only stand-in: the "signature" is a keyed fast hash and the
    // verifier recomputes it from the public key. Statistics mode only.
    const Digest pk = fast_hash(seed);
    kp.public_key = pk;
    std::copy(seed.begin(), seed.end(), kp.secret_key.begin());
    std::copy(pk.begin(), pk.end(), kp.secret_key.begin() + 32);
    return kp;
  }
  ensure_sodium();
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  return kp;
}

Signature sign(HashMode mode, const KeyPair& kp, std::span<const std::uint8_t> msg) {
  Signature sig;
  if (mode == HashMode::FastSim) {
    Bytes buf(kp.public_key.begin(), kp.public_key.end());
    append_bytes(buf, msg);
    const Digest d1 = fast_hash(buf);
    buf.push_back(0x5A);
    const Digest d2 = fast_hash(buf);
    std::copy(d1.begin(), d1.end(), sig.bytes.begin());
    std::copy(d2.begin(), d2.end(), sig.bytes.begin() + 32);
    return sig;
  }
  ensure_sodium();
  crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(),
                       kp.secret_key.data());
  return sig;
}

bool verify(HashMode mode, const std::array<std::uint8_t, 32>& public_key,
            std::span<const std::uint8_t> msg, const Signature& sig) {
  if (mode == HashMode::FastSim) {
    Bytes buf(public_key.begin(), public_key.end());
    append_bytes(buf, msg);
    const Digest d1 = fast_hash(buf);
    buf.push_back(0x5A);
    const Digest d2 = fast_hash(buf);
    return std::equal(d1.begin(), d1.end(), sig.bytes.begin()) &&
           std::equal(d2.begin(), d2.end(), sig.bytes.begin() + 32);
  }
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(),
                                     public_key.data()) == 0;
}

MprngSession::MprngSession(HashMode mode, std::vector<PeerId> participants)
    : mode_(mode), participants_(std::move(participants)) {
  if (participants_.empty()) throw StateError("mprng: no participants");
}

Digest MprngSession::commitment_digest(HashMode mode, PeerId peer,
                                       const std::array<std::uint8_t, 32>& x,
                                       const std::array<std::uint8_t, 32>& salt) {
  Bytes buf;
  buf.push_back(kTagCommit);
  append_u64(buf, peer);
  append_bytes(buf, x);
  append_bytes(buf, salt);
  return hash_bytes(mode, buf);
}

bool MprngSession::commit(PeerId peer, const Digest& commitment) {
  if (phase_ != Phase::Commit) {
    flag(peer);
    return false;
  }
  if (commitments_.count(peer)) {
    flag(peer);  // contradicting broadcast
    return false;
  }
  if (std::find(participants_.begin(), participants_.end(), peer) == participants_.end())
    return false;
  commitments_[peer] = commitment;
  if (commitments_.size() == participants_.size()) phase_ = Phase::Reveal;
  return true;
}

bool MprngSession::reveal(PeerId peer, const std::array<std::uint8_t, 32>& x,
                          const std::array<std::uint8_t, 32>& salt) {
  if (phase_ != Phase::Reveal) {
    flag(peer);
    return false;
  }
  const auto it = commitments_.find(peer);
  if (it == commitments_.end() || reveals_.count(peer)) {
    flag(peer);
    return false;
  }
  if (commitment_digest(mode_, peer, x, salt) != it->second) {
    flag(peer);
    phase_ = Phase::Aborted;
    return false;
  }
  reveals_[peer] = x;
  if (reveals_.size() == participants_.size()) {
    output_.fill(0);
    for (const auto& [id, xv] : reveals_)
      for (std::size_t k = 0; k < 32; ++k) output_[k] ^= xv[k];
    phase_ = Phase::Done;
  }
  return true;
}

void MprngSession::close_phase(Phase which) {
  if (phase_ != which) return;  // already advanced, aborted or done
  bool missing = false;
  for (const PeerId p : participants_) {
    if (which == Phase::Commit ? !commitments_.count(p) : !reveals_.count(p)) {
      flag(p);
      missing = true;
    }
  }
  if (missing) phase_ = Phase::Aborted;
}

const std::array<std::uint8_t, 32>& MprngSession::output() const {
  if (phase_ != Phase::Done) throw StateError("mprng: output before Done");
  return output_;
}

std::optional<Digest> MprngSession::commitment_of(PeerId peer) const {
  const auto it = commitments_.find(peer);
  if (it == commitments_.end()) return std::nullopt;
  return it->second;
}

void MprngSession::flag(PeerId peer) {
  if (std::find(flagged_.begin(), flagged_.end(), peer) == flagged_.end())
    flagged_.push_back(peer);
}

std::uint64_t derive(const std::array<std::uint8_t, 32>& output, std::string_view tag) {
  const auto d = derive_bytes(output, tag);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | d[k];
  return v;
}

std::array<std::uint8_t, 32> derive_bytes(const std::array<std::uint8_t, 32>& output,
                                          std::string_view tag) {
  Bytes buf(output.begin(), output.end());
  for (const char c : tag) buf.push_back(static_cast<std::uint8_t>(c));
  return hash_bytes(HashMode::Crypto, buf);
}

}  // namespace stockade
