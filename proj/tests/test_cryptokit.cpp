#include <doctest.h>

#include <cmath>
#include <cstring>

#include "stockade/cryptokit.hpp"
#include "stockade/rng.hpp"

using namespace stockade;

TEST_SUITE_BEGIN("cryptokit");

TEST_CASE("canonical vector encoding is tag, LE length, IEEE-754 LE payload") {
  const Bytes enc = canonical_vector(Vec{1.0});
  REQUIRE(enc.size() == 1 + 8 + 8);
  CHECK(enc[0] == kTagVector);
  CHECK(enc[1] == 1);  // length 1, little endian
  for (int i = 2; i < 9; ++i) CHECK(enc[i] == 0);
  const std::uint8_t ieee[8] = {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F};
  for (int i = 0; i < 8; ++i) CHECK(enc[9 + i] == ieee[i]);
}

TEST_CASE("canonical encoding is injective on finite payloads") {
  const Vec a{0.1, 0.2};
  Vec b = a;
  CHECK(canonical_vector(a) == canonical_vector(b));
  b[1] = std::nextafter(b[1], 1.0);  // one ULP
  CHECK(canonical_vector(a) != canonical_vector(b));
  CHECK(hash_vector(HashMode::Crypto, a) != hash_vector(HashMode::Crypto, b));
}

TEST_CASE("sha-256 known answer") {
  // SHA-256 of the empty string.
  const Digest d = hash_bytes(HashMode::Crypto, {});
  CHECK(hex(d) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("signature round-trip and bit-flip rejection") {
  for (const HashMode mode : {HashMode::Crypto, HashMode::FastSim}) {
    SeededStream rng(5);
    std::array<std::uint8_t, 32> seed{};
    rng.fill_bytes(seed.data(), seed.size());
    const KeyPair kp = KeyPair::from_seed(mode, seed);
    const int rounds = mode == HashMode::Crypto ? 1000 : 100;
    for (int i = 0; i < rounds; ++i) {
      Bytes msg(1 + rng.next_below(64));
      rng.fill_bytes(msg.data(), msg.size());
      const Signature sig = sign(mode, kp, msg);
      CHECK(verify(mode, kp.public_key, msg, sig));
      Bytes corrupted = msg;
      corrupted[rng.next_below(corrupted.size())] ^=
          std::uint8_t(1) << rng.next_below(8);
      CHECK_FALSE(verify(mode, kp.public_key, corrupted, sig));
    }
  }
}

namespace {
std::array<std::uint8_t, 32> word(std::uint8_t b0) {
  std::array<std::uint8_t, 32> out{};
  out[0] = b0;
  return out;
}
}  // namespace

TEST_CASE("commit-reveal session: phases, XOR output, violations") {
  MprngSession s(HashMode::Crypto, {0, 1, 2});
  const auto salt = word(0xAA);
  const auto x0 = word(0b1010), x1 = word(0b0110), x2 = word(0b0011);
  CHECK(s.commit(0, MprngSession::commitment_digest(HashMode::Crypto, 0, x0, salt)));
  // duplicate commit is a violation against the committer
  CHECK_FALSE(s.commit(0, MprngSession::commitment_digest(HashMode::Crypto, 0, x1, salt)));
  CHECK(s.flagged() == std::vector<PeerId>{0});
  CHECK(s.commit(1, MprngSession::commitment_digest(HashMode::Crypto, 1, x1, salt)));
  CHECK(s.phase() == MprngSession::Phase::Commit);
  CHECK(s.commit(2, MprngSession::commitment_digest(HashMode::Crypto, 2, x2, salt)));
  CHECK(s.phase() == MprngSession::Phase::Reveal);
  // a commit after the reveal phase began is rejected
  CHECK_FALSE(s.commit(1, MprngSession::commitment_digest(HashMode::Crypto, 1, x0, salt)));
  CHECK(s.reveal(0, x0, salt));
  CHECK(s.reveal(1, x1, salt));
  CHECK(s.reveal(2, x2, salt));
  REQUIRE(s.phase() == MprngSession::Phase::Done);
  CHECK(s.output()[0] == 0b1111);
  for (std::size_t i = 1; i < 32; ++i) CHECK(s.output()[i] == 0);
}

TEST_CASE("single-participant session returns its own value") {
  MprngSession s(HashMode::Crypto, {4});
  const auto x = word(0x5C), salt = word(0x01);
  s.commit(4, MprngSession::commitment_digest(HashMode::Crypto, 4, x, salt));
  s.reveal(4, x, salt);
  REQUIRE(s.phase() == MprngSession::Phase::Done);
  CHECK(s.output() == x);
}

TEST_CASE("a reveal that contradicts the commitment aborts and names the peer") {
  MprngSession s(HashMode::Crypto, {0, 1});
  const auto salt = word(0);
  s.commit(0, MprngSession::commitment_digest(HashMode::Crypto, 0, word(1), salt));
  s.commit(1, MprngSession::commitment_digest(HashMode::Crypto, 1, word(2), salt));
  CHECK(s.reveal(0, word(1), salt));
  CHECK_FALSE(s.reveal(1, word(9), salt));  // not what was committed
  CHECK(s.phase() == MprngSession::Phase::Aborted);
  CHECK(s.flagged() == std::vector<PeerId>{1});
  CHECK_THROWS_AS(s.output(), StateError);
}

TEST_CASE("missing reveals at the deadline abort without the silent peer") {
  MprngSession s(HashMode::Crypto, {0, 1});
  const auto salt = word(0);
  s.commit(0, MprngSession::commitment_digest(HashMode::Crypto, 0, word(1), salt));
  s.commit(1, MprngSession::commitment_digest(HashMode::Crypto, 1, word(2), salt));
  s.reveal(0, word(1), salt);
  s.close_phase(MprngSession::Phase::Reveal);
  CHECK(s.phase() == MprngSession::Phase::Aborted);
  CHECK(s.flagged() == std::vector<PeerId>{1});
}

TEST_CASE("derive separates purposes and replays deterministically") {
  std::array<std::uint8_t, 32> out{};
  out[3] = 77;
  CHECK(derive(out, "z") != derive(out, "validators"));
  CHECK(derive(out, "z") == derive(out, "z"));
}

TEST_CASE("derived bytes look uniform at 8-bit granularity") {
  // Chi-square over 256 bins, 10^4 samples, alpha = 0.001.
  std::array<std::uint32_t, 256> counts{};
  SeededStream rng(21);
  for (int i = 0; i < 10000; ++i) {
    std::array<std::uint8_t, 32> out{};
    rng.fill_bytes(out.data(), out.size());
    counts[derive_bytes(out, "t")[0]] += 1;
  }
  const double expected = 10000.0 / 256.0;
  double chi2 = 0.0;
  for (const auto c : counts) {
    const double d = c - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 < 330.5);  // 0.999 quantile of chi-square with 255 dof
}

TEST_SUITE_END();
