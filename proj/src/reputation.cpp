#include "stockade/reputation.hpp"

#include <algorithm>
#include <cmath>

namespace stockade {

ReputationRecord ReputationRecord::genesis(PeerId peer) {
  ReputationRecord rec;
  rec.peer = peer;
  rec.threshold = 0;
  rec.status = TrustStatus::Trusted;
  return rec;
}

ReputationRecord ReputationRecord::joiner(PeerId peer, std::uint32_t threshold) {
  ReputationRecord rec;
  rec.peer = peer;
  rec.threshold = threshold;
  rec.status = TrustStatus::Untrusted;
  return rec;
}

std::uint64_t ReputationRecord::next_step() const {
  return entries.empty() ? 0 : entries.back().step + 1;
}

bool ReputationRecord::has_entry(std::uint64_t step) const {
  for (const auto& e : entries)
    if (e.step == step) return true;
  return false;
}

bool ReputationRecord::record_gradient_hash(std::uint64_t step, const Digest& digest,
                                            const Signature& sig, bool signature_valid) {
  if (status == TrustStatus::Banned) return false;
  // Even a single missing hash breaks the chain.
  if (!signature_valid || (!entries.empty() && step != next_step())) {
    status = TrustStatus::Banned;
    return false;
  }
  entries.push_back({step, digest, sig, EntryState::Pending, kNoPeer});
  return true;
}

bool ReputationRecord::record_recalculated(std::uint64_t step, const Digest& digest,
                                           const Signature& sig) {
  if (status == TrustStatus::Banned) return false;
  if (!entries.empty() && step != next_step()) {
    status = TrustStatus::Banned;
    return false;
  }
  entries.push_back({step, digest, sig, EntryState::Recalculated, kNoPeer});
  return true;
}

bool ReputationRecord::process_validation(std::uint64_t step, bool approve, PeerId validator,
                                          bool elected) {
  if (!elected) return false;  // reporter was not chosen for this (peer, step)
  if (status == TrustStatus::Banned) return false;
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const RecordEntry& e) { return e.step == step; });
  if (it == entries.end()) {
    status = TrustStatus::Banned;  // validated step missing from the chain
    return true;
  }
  if (!approve) {
    status = TrustStatus::Banned;
    return true;
  }
  if (it->state == EntryState::Pending) {
    it->state = EntryState::Approved;
    it->validator = validator;
    ++approved;
    if (status == TrustStatus::Untrusted && approved >= threshold)
      status = TrustStatus::Trusted;
  }
  return true;
}

void JoinQueue::enqueue(PeerId peer) { waiting.push_back(peer); }

std::vector<PeerId> JoinQueue::admit() {
  std::vector<PeerId> admitted;
  while (!waiting.empty() && active_untrusted.size() < capacity()) {
    active_untrusted.push_back(waiting.front());
    admitted.push_back(waiting.front());
    waiting.pop_front();
  }
  return admitted;
}

void JoinQueue::resolve(PeerId peer, bool became_trusted) {
  auto it = std::find(active_untrusted.begin(), active_untrusted.end(), peer);
  if (it != active_untrusted.end()) active_untrusted.erase(it);
  if (became_trusted) ++trusted_count;
}

double sybil_expected_trusted(std::span<const double> allocation, int threshold) {
  double acc = 0.0;
  for (const double p : allocation) {
    if (p < 0.0 || p > 1.0) throw ConfigError("sybil: probabilities must be in [0, 1]");
    acc += std::pow(p, threshold);
  }
  return acc;
}

double temporary_majority_probability(int identities, int threshold) {
  if (identities < 1) throw ConfigError("sybil: need at least one identity");
  return std::pow(static_cast<double>(identities),
                  -static_cast<double>(threshold) * identities);
}

}  // namespace stockade
