#include <doctest.h>

#include <set>

#include "stockade/simnet.hpp"

using namespace stockade;

TEST_SUITE_BEGIN("simnet");

namespace {

KeyPair test_keys(std::uint8_t id) {
  std::array<std::uint8_t, 32> seed{};
  seed[0] = id;
  return KeyPair::from_seed(HashMode::Crypto, seed);
}

Message msg(const KeyPair& kp, PeerId sender, MsgKind kind, std::uint8_t tagbyte,
            std::uint64_t step = 0) {
  return make_signed(HashMode::Crypto, kp, step, sender, kind, Bytes{tagbyte});
}

}  // namespace

TEST_CASE("event queue pops in (time, insertion) order") {
  EventQueue q;
  Event a;
  a.time = {2, 0, 0};
  Event b;
  b.time = {1, 3, 0};
  Event c;
  c.time = {1, 2, 9};
  q.push(a);
  q.push(b);
  q.push(c);
  CHECK(q.pop().time == LogicalTime{1, 2, 9});
  CHECK(q.pop().time == LogicalTime{1, 3, 0});
  CHECK(q.pop().time == LogicalTime{2, 0, 0});
  CHECK(q.empty());
  CHECK_THROWS_AS(q.pop(), StateError);
}

TEST_CASE("identical duplicates are deduplicated, contradictions retained") {
  BroadcastChannel ch(HashMode::Crypto, 2, 0);
  const KeyPair kp = test_keys(1);
  const Message m1 = msg(kp, 1, MsgKind::AggHash, 0xAB);
  ch.publish(m1);
  ch.publish(m1);  // identical resend: idempotent
  const Message m2 = msg(kp, 1, MsgKind::AggHash, 0xCD);
  ch.publish(m2);  // contradicting payload: both kept as evidence
  const auto got = ch.collect(0, {0, 0, 0});
  CHECK(got.size() == 2);
}

TEST_CASE("per-sender order is preserved under cross-sender reorder") {
  for (const std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    BroadcastChannel ch(HashMode::Crypto, 3, seed);
    const KeyPair k0 = test_keys(0), k1 = test_keys(1);
    ch.publish(msg(k0, 0, MsgKind::Checksum, 1));
    ch.publish(msg(k1, 1, MsgKind::Checksum, 10));
    ch.publish(msg(k0, 0, MsgKind::Norm, 2));
    ch.publish(msg(k1, 1, MsgKind::Norm, 20));
    for (PeerId r = 0; r < 3; ++r) {
      const auto got = ch.collect(r, {0, 5, 0});
      REQUIRE(got.size() == 4);
      std::vector<std::uint8_t> from0, from1;
      for (const auto& m : got)
        (m.sender == 0 ? from0 : from1).push_back(m.payload[0]);
      CHECK(from0 == std::vector<std::uint8_t>{1, 2});
      CHECK(from1 == std::vector<std::uint8_t>{10, 20});
    }
  }
}

TEST_CASE("reorder seeds actually change the interleaving") {
  std::set<std::vector<std::uint8_t>> orders;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    BroadcastChannel ch(HashMode::Crypto, 2, seed);
    for (std::uint8_t s = 0; s < 6; ++s)
      ch.publish(msg(test_keys(s % 2), s % 2, MsgKind::Checksum, s));
    std::vector<std::uint8_t> order;
    for (const auto& m : ch.collect(0, {0, 1, 0})) order.push_back(m.payload[0]);
    orders.insert(order);
  }
  CHECK(orders.size() > 1);
}

TEST_CASE("point-to-point mailboxes deliver and drain") {
  P2PNetwork net(HashMode::Crypto, 3);
  const KeyPair kp = test_keys(2);
  net.send(msg(kp, 2, MsgKind::Part, 0x01), 0);
  net.send(msg(kp, 2, MsgKind::Part, 0x02), 0);
  CHECK(net.drain(0).size() == 2);
  CHECK(net.drain(0).empty());
  CHECK(net.counters().p2p_bytes > 0);
  CHECK_THROWS_AS(net.send(msg(kp, 2, MsgKind::Part, 0x03), 9), StateError);
}

TEST_CASE("fault plans outside Byzantine-controlled links are rejected") {
  std::vector<bool> byz{false, true, false};
  FaultSpec ok;
  ok.kind = FaultSpec::Kind::Drop;
  ok.from = 1;
  validate_faults({ok}, byz);  // no throw
  FaultSpec bad = ok;
  bad.from = 0;  // honest sender
  CHECK_THROWS_AS(validate_faults({bad}, byz), ConfigError);
  FaultSpec reorder;
  reorder.kind = FaultSpec::Kind::Reorder;
  reorder.from = kNoPeer;
  validate_faults({reorder}, byz);  // channel-level, allowed
}

TEST_CASE("trace digest pins every line") {
  TraceSink a(HashMode::Crypto), b(HashMode::Crypto);
  a.emit({0, 1, 0}, "ban", 3, "\"cause\":\"x\"");
  b.emit({0, 1, 0}, "ban", 3, "\"cause\":\"x\"");
  CHECK(a.trace_digest() == b.trace_digest());
  CHECK(a.final_line() == b.final_line());
  b.emit({0, 2, 0}, "ban", 4, "");
  CHECK(a.trace_digest() != b.trace_digest());
}

TEST_SUITE_END();
