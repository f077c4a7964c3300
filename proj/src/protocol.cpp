#include "stockade/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>

namespace stockade {

const char* ban_cause_name(BanCause cause) {
  switch (cause) {
    case BanCause::GradientFraud: return "gradient_fraud";
    case BanCause::AggregationFraud: return "aggregation_fraud";
    case BanCause::FalseAccusation: return "false_accusation";
    case BanCause::ProtocolViolation: return "protocol_violation";
    case BanCause::MutualEliminate: return "mutual_eliminate";
    case BanCause::CoverUp: return "cover_up";
  }
  return "unknown";
}

bool BanLedger::ban(PeerId peer, std::uint64_t step, BanCause cause) {
  if (banned_[peer]) return false;
  banned_[peer] = true;
  records_.push_back({peer, step, cause});
  return true;
}

std::array<std::uint32_t, kBanCauseCount> BanLedger::counts_by_cause() const {
  std::array<std::uint32_t, kBanCauseCount> counts{};
  for (const auto& r : records_) ++counts[static_cast<int>(r.cause)];
  return counts;
}

Bytes BanLedger::canonical() const {
  Bytes out;
  append_u64(out, records_.size());
  for (const auto& r : records_) {
    append_u64(out, r.peer);
    append_u64(out, r.step);
    out.push_back(static_cast<std::uint8_t>(r.cause));
  }
  return out;
}

Digest BanLedger::digest(HashMode mode) const { return hash_bytes(mode, canonical()); }

int StepPublicInfo::rank_of(PeerId peer) const {
  for (std::size_t r = 0; r < participants.size(); ++r)
    if (participants[r] == peer) return static_cast<int>(r);
  return -1;
}

bool StepPublicInfo::excluded(std::uint64_t partition, PeerId peer) const {
  return exclusions.count({partition, peer}) != 0;
}

std::size_t StepPublicInfo::included_count(std::uint64_t partition) const {
  std::size_t n = 0;
  for (const PeerId p : participants)
    if (!excluded(partition, p)) ++n;
  return n;
}

double checksum_threshold(const StepPublicInfo& info, std::uint64_t partition) {
  double max_norm = 0.0;
  for (const PeerId p : info.participants) {
    if (info.excluded(partition, p)) continue;
    const auto it = info.norms.find(p);
    if (it == info.norms.end() || partition >= it->second.size()) continue;
    const double v = it->second[partition];
    if (std::isfinite(v)) max_norm = std::max(max_norm, v);
  }
  double scale = max_norm;
  if (std::isfinite(info.tau_eff[partition])) scale = std::min(scale, info.tau_eff[partition]);
  scale = std::max(scale, 1.0);
  const double s = static_cast<double>(info.layout.part_size(partition));
  return static_cast<double>(info.included_count(partition)) * 1e-6 * std::sqrt(s) * scale;
}

bool partition_checksums_cancel(const StepPublicInfo& info, std::uint64_t partition) {
  double sum = 0.0;
  for (const PeerId p : info.participants) {
    if (info.excluded(partition, p)) continue;
    const auto it = info.checksums.find(p);
    if (it != info.checksums.end() && partition < it->second.size())
      sum += it->second[partition];
  }
  return std::abs(sum) <= checksum_threshold(info, partition);
}

bool aggregator_flagged_input(const StepPublicInfo& info, PeerId aggregator) {
  for (const auto& [agg, flagged] : info.round_one_flags)
    if (agg == aggregator) return true;
  return false;
}

ValidatorElection elect_validators(const std::array<std::uint8_t, 32>& randomness,
                                   const std::vector<PeerId>& active, int m) {
  ValidatorElection out;
  if (m <= 0 || active.empty()) return out;
  int eff = m;
  if (static_cast<std::size_t>(2 * m) > active.size())
    eff = static_cast<int>(active.size() / 2);  // logged by the caller
  if (eff == 0) return out;
  std::vector<PeerId> pool(active.begin(), active.end());
  std::sort(pool.begin(), pool.end());
  SeededStream stream(derive(randomness, "validators"));
  for (int k = 0; k < 2 * eff; ++k) {
    const std::size_t idx = k + stream.next_below(pool.size() - k);
    std::swap(pool[k], pool[idx]);
  }
  out.checkers.assign(pool.begin(), pool.begin() + eff);
  out.targets.assign(pool.begin() + eff, pool.begin() + 2 * eff);
  out.effective_m = eff;
  return out;
}

ReplayVerdict accuse_replay(const StepPublicInfo& info, const Objective& objective,
                            HashMode mode, PeerId target) {
  ReplayVerdict verdict;
  const int rank = info.rank_of(target);
  const auto seed_it = info.seeds.find(target);
  if (seed_it == info.seeds.end()) return verdict;  // checker step: nothing committed
  Vec g = compute_gradient(objective, info.x, seed_it->second);
  if (info.grad_clip_lambda > 0.0) {
    // Clipped variant: honest peers exchange per-part clipped gradients.
    Vec clipped(g.size());
    for (std::size_t j = 0; j < info.layout.parts; ++j) {
      const Vec part = clip_gradient_part(info.layout.slice(g, j), info.grad_clip_lambda);
      std::copy(part.begin(), part.end(), clipped.begin() + info.layout.offsets[j]);
    }
    g = std::move(clipped);
  }

  // Gradient attack: committed hashes differ from the honest recomputation.
  const auto commit_it = info.commitments.find(target);
  if (commit_it == info.commitments.end()) {
    verdict.guilty = true;
    verdict.cause = BanCause::ProtocolViolation;  // required broadcast missing
    return verdict;
  }
  if (hash_vector(mode, g) != commit_it->second) {
#ifdef STOCKADE_DEBUG_REPLAY
    std::fprintf(stderr,
                 "replay[%u@%llu]: commit mismatch seed=%llu xdig=%s recomputed=%s committed=%s\n",
                 target, (unsigned long long)info.step,
                 (unsigned long long)seed_it->second,
                 hex(hash_vector(mode, info.x)).substr(0, 8).c_str(),
                 hex(hash_vector(mode, g)).substr(0, 8).c_str(),
                 hex(commit_it->second).substr(0, 8).c_str());
#endif
    verdict.guilty = true;
    verdict.cause = BanCause::GradientFraud;
    return verdict;
  }
  if (rank < 0) return verdict;  // joining peer: only the commitment exists

  const auto parts_it = info.part_hashes.find(target);
  if (parts_it == info.part_hashes.end() || parts_it->second.size() != info.layout.parts) {
    verdict.guilty = true;
    verdict.cause = BanCause::ProtocolViolation;
    return verdict;
  }
  for (std::size_t j = 0; j < info.layout.parts; ++j) {
    const auto s = info.layout.slice(g, j);
    if (hash_vector(mode, Vec(s.begin(), s.end())) != parts_it->second[j]) {
      verdict.guilty = true;
      verdict.cause = BanCause::GradientFraud;
      return verdict;
    }
  }

  // Aggregation attack cover-ups: norms / inner products inconsistent with
  // the committed data. Both sides evaluate identical expressions on
  // identical bytes, so comparison is exact.
  const auto norm_it = info.norms.find(target);
  const auto sum_it = info.checksums.find(target);
  const auto flag_it = info.flags.find(target);
  if (norm_it == info.norms.end() || sum_it == info.checksums.end() ||
      flag_it == info.flags.end() || norm_it->second.size() != info.layout.parts ||
      sum_it->second.size() != info.layout.parts ||
      flag_it->second.size() != info.layout.parts) {
    verdict.guilty = true;
    verdict.cause = BanCause::ProtocolViolation;
    return verdict;
  }
  const Vec z = random_unit_direction(info.z_seed, info.layout);
  for (std::size_t j = 0; j < info.layout.parts; ++j) {
    if (info.excluded(j, target)) continue;
    const auto gj = info.layout.slice(g, j);
    const auto hatj = info.layout.slice(info.aggregate, j);
    const Vec dev = clipped_deviation(Vec(gj.begin(), gj.end()),
                                      Vec(hatj.begin(), hatj.end()), info.tau_eff[j]);
    const double true_norm = norm_diff(gj, hatj);
    const double true_s = dot(info.layout.slice(z, j), dev);
    const bool norm_ok = norm_it->second[j] == true_norm ||
                         (std::isnan(norm_it->second[j]) && std::isnan(true_norm));
    const bool sum_ok = sum_it->second[j] == true_s;
    const bool flag_ok =
        (flag_it->second[j] != 0) == (norm_it->second[j] > info.delta_max);
    if (!flag_ok) {
      verdict.guilty = true;
      verdict.cause = BanCause::ProtocolViolation;
      return verdict;
    }
    if (!norm_ok || !sum_ok) {
      verdict.guilty = true;
      verdict.cause = BanCause::AggregationFraud;
      const PeerId aggregator = info.participants[j];
      if (aggregator != target && !info.round_one_flags.count({aggregator, target}))
        verdict.coverups.push_back(aggregator);  // silently approved the lie
    }
  }
  if (verdict.guilty) return verdict;

  // Aggregator's own partition: the checksums it implicitly approved must
  // cancel. A round-one flag hands the blame to the flagged sender instead.
  const std::uint64_t own = static_cast<std::uint64_t>(rank);
  if (!aggregator_flagged_input(info, target) && !partition_checksums_cancel(info, own)) {
    verdict.guilty = true;
    verdict.cause = BanCause::AggregationFraud;
  }
  return verdict;
}

}  // namespace stockade
