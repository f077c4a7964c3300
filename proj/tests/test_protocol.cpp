#include <doctest.h>

#include <cmath>

#include "stockade/protocol.hpp"
#include "stockade/rng.hpp"

using namespace stockade;

TEST_SUITE_BEGIN("protocol");

namespace {

// A minimal consistent round: three participants, no noise, exact mean.
struct Fixture {
  Objective obj = Objective::quadratic(6, 1.0, Vec(6, 0.0));
  StepPublicInfo info;
  HashMode mode = HashMode::Crypto;

  Fixture() {
    info.step = 4;
    info.x = Vec(6, 1.0);
    info.participants = {0, 1, 2};
    info.layout = PartitionLayout::make(6, 3);
    info.tau_eff = Vec(3, std::numeric_limits<double>::infinity());
    info.delta_max = 1.0;
    info.z_seed = 77;
    std::vector<Vec> gradients;
    for (PeerId p = 0; p < 3; ++p) {
      info.seeds[p] = 100 + p;
      const Vec g = compute_gradient(obj, info.x, info.seeds[p]);
      gradients.push_back(g);
      info.commitments[p] = hash_vector(mode, g);
      auto& hashes = info.part_hashes[p];
      for (const Vec& part : split(g, 3)) hashes.push_back(hash_vector(mode, part));
    }
    // Exact mean aggregation; all gradients are equal without noise.
    info.aggregate = mean_vec(gradients);
    info.update_aggregate = info.aggregate;
    for (std::uint64_t j = 0; j < 3; ++j)
      info.agg_hashes[j] = hash_vector(
          mode, Vec(info.aggregate.begin() + info.layout.offsets[j],
                    info.aggregate.begin() + info.layout.offsets[j + 1]));
    const Vec z = random_unit_direction(info.z_seed, info.layout);
    for (PeerId p = 0; p < 3; ++p) {
      Vec sums(3), norms(3);
      std::vector<std::uint8_t> flags(3);
      for (std::uint64_t j = 0; j < 3; ++j) {
        const auto own = info.layout.slice(gradients[p], j);
        const auto hat = info.layout.slice(info.aggregate, j);
        const Vec dev = clipped_deviation(Vec(own.begin(), own.end()),
                                          Vec(hat.begin(), hat.end()), info.tau_eff[j]);
        norms[j] = norm_diff(own, hat);
        sums[j] = dot(info.layout.slice(z, j), dev);
        flags[j] = norms[j] > info.delta_max ? 1 : 0;
      }
      info.checksums[p] = sums;
      info.norms[p] = norms;
      info.flags[p] = flags;
    }
  }
};

}  // namespace

TEST_CASE("ban ledger: appends once, canonical digest") {
  BanLedger a(4), b(4);
  CHECK(a.ban(1, 3, BanCause::GradientFraud));
  CHECK_FALSE(a.ban(1, 5, BanCause::CoverUp));  // already banned
  CHECK(a.is_banned(1));
  CHECK(a.ban_count() == 1);
  b.ban(1, 3, BanCause::GradientFraud);
  CHECK(a.digest(HashMode::Crypto) == b.digest(HashMode::Crypto));
  b.ban(2, 3, BanCause::CoverUp);
  CHECK(a.digest(HashMode::Crypto) != b.digest(HashMode::Crypto));
  CHECK(b.counts_by_cause()[int(BanCause::CoverUp)] == 1);
}

TEST_CASE("validator election: deterministic, distinct, positionally paired") {
  std::array<std::uint8_t, 32> r{};
  r[5] = 9;
  std::vector<PeerId> active(16);
  for (PeerId p = 0; p < 16; ++p) active[p] = p;
  const auto e1 = elect_validators(r, active, 2);
  const auto e2 = elect_validators(r, active, 2);
  CHECK(e1.checkers == e2.checkers);
  CHECK(e1.targets == e2.targets);
  REQUIRE(e1.checkers.size() == 2);
  REQUIRE(e1.targets.size() == 2);
  std::set<PeerId> all(e1.checkers.begin(), e1.checkers.end());
  all.insert(e1.targets.begin(), e1.targets.end());
  CHECK(all.size() == 4);  // without replacement

  // fewer than 2m peers: m is reduced
  const auto small = elect_validators(r, {3, 7, 9}, 2);
  CHECK(small.effective_m == 1);
}

TEST_CASE("election frequencies match the binomial oracle") {
  std::vector<PeerId> active(16);
  for (PeerId p = 0; p < 16; ++p) active[p] = p;
  std::array<std::uint64_t, 16> hits{};
  SeededStream rng(321);
  const int rounds = 100000;
  const int m = 2;
  for (int i = 0; i < rounds; ++i) {
    std::array<std::uint8_t, 32> r{};
    rng.fill_bytes(r.data(), r.size());
    const auto e = elect_validators(r, active, m);
    for (const PeerId p : e.checkers) ++hits[p];
    for (const PeerId p : e.targets) ++hits[p];
  }
  const double expect = double(rounds) * 2.0 * m / 16.0;
  const double sigma = std::sqrt(double(rounds) * (2.0 * m / 16.0) * (1.0 - 2.0 * m / 16.0));
  for (const auto h : hits) CHECK(std::abs(double(h) - expect) < 3.0 * sigma);
}

TEST_CASE("replay exonerates a consistent participant") {
  Fixture f;
  const auto v = accuse_replay(f.info, f.obj, f.mode, 1);
  CHECK_FALSE(v.guilty);
}

TEST_CASE("replay convicts a forged gradient commitment") {
  Fixture f;
  f.info.commitments[1][0] ^= 0xFF;
  const auto v = accuse_replay(f.info, f.obj, f.mode, 1);
  CHECK(v.guilty);
  CHECK(v.cause == BanCause::GradientFraud);
}

TEST_CASE("replay convicts a lied checksum and names the silent aggregator") {
  Fixture f;
  f.info.checksums[2][0] += 0.25;  // partition 0 is aggregated by peer 0
  const auto v = accuse_replay(f.info, f.obj, f.mode, 2);
  CHECK(v.guilty);
  CHECK(v.cause == BanCause::AggregationFraud);
  REQUIRE(v.coverups.size() == 1);
  CHECK(v.coverups[0] == 0);

  // With a first-round flag on record the aggregator is off the hook.
  f.info.round_one_flags.insert({0, 2});
  const auto v2 = accuse_replay(f.info, f.obj, f.mode, 2);
  CHECK(v2.guilty);
  CHECK(v2.coverups.empty());
}

TEST_CASE("replay convicts an aggregator whose partition sum cannot cancel") {
  Fixture f;
  f.info.checksums[0][1] += 0.5;  // breaks the sum on partition 1 (aggregator 1)
  // against target 1 (the aggregator): it approved the wrong sum silently
  const auto v = accuse_replay(f.info, f.obj, f.mode, 1);
  CHECK(v.guilty);
  CHECK(v.cause == BanCause::AggregationFraud);
  // but a round-one flag by the aggregator shifts the blame
  f.info.round_one_flags.insert({1, 0});
  const auto v2 = accuse_replay(f.info, f.obj, f.mode, 1);
  CHECK_FALSE(v2.guilty);
}

TEST_CASE("replay flags inconsistent check flags as protocol violations") {
  Fixture f;
  f.info.flags[2][1] = 1;  // claims a deviation its broadcast norm contradicts
  const auto v = accuse_replay(f.info, f.obj, f.mode, 2);
  CHECK(v.guilty);
  CHECK(v.cause == BanCause::ProtocolViolation);
}

TEST_CASE("checksum threshold scales with the partition and cancels honestly") {
  Fixture f;
  for (std::uint64_t j = 0; j < 3; ++j) {
    CHECK(partition_checksums_cancel(f.info, j));
    CHECK(checksum_threshold(f.info, j) > 0.0);
  }
  f.info.checksums[1][2] = 1.0;
  CHECK_FALSE(partition_checksums_cancel(f.info, 2));
}

TEST_SUITE_END();
