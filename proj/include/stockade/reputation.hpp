#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "stockade/common.hpp"
#include "stockade/cryptokit.hpp"

namespace stockade {

enum class TrustStatus : std::uint8_t { Untrusted, Trusted, Banned };
enum class EntryState : std::uint8_t { Pending, Approved, Recalculated };

struct RecordEntry {
  std::uint64_t step = 0;
  Digest digest{};
  Signature signature{};
  EntryState state = EntryState::Pending;
  PeerId validator = kNoPeer;
};

/// Public per-peer gradient-hash chain. Entries must be consecutive by step;
/// a gap or a rejected validation bans the peer. A peer becomes trusted once
/// `threshold` entries carry approvals from elected validators.
struct ReputationRecord {
  PeerId peer = kNoPeer;
  std::uint32_t threshold = 0;
  TrustStatus status = TrustStatus::Untrusted;
  std::uint32_t approved = 0;
  std::vector<RecordEntry> entries;

  static ReputationRecord genesis(PeerId peer);  // founding roster, trusted from step 0
  static ReputationRecord joiner(PeerId peer, std::uint32_t threshold);

  /// Appends a Pending entry. Returns false (status Banned) on a step gap
  /// or an invalid signature flag.
  bool record_gradient_hash(std::uint64_t step, const Digest& digest, const Signature& sig,
                            bool signature_valid = true);

  /// Fills a validator's own skipped step with the hash it recomputed.
  bool record_recalculated(std::uint64_t step, const Digest& digest, const Signature& sig);

  /// Validation verdict for the entry at `step` from an elected validator.
  /// Approval counts toward the threshold; any rejection bans. Verdicts from
  /// non-elected reporters are ignored (returns false).
  bool process_validation(std::uint64_t step, bool approve, PeerId validator, bool elected);

  bool has_entry(std::uint64_t step) const;
  std::uint64_t next_step() const;
};

/// Admission gate: at most floor(trusted/2) untrusted peers are active at
/// once; the rest wait in FIFO order.
struct JoinQueue {
  std::size_t trusted_count = 0;
  std::vector<PeerId> active_untrusted;
  std::deque<PeerId> waiting;

  std::size_t capacity() const { return trusted_count / 2; }
  void enqueue(PeerId peer);
  std::vector<PeerId> admit();            // moves waiters into the active set up to capacity
  void resolve(PeerId peer, bool became_trusted);
  bool cap_respected() const { return active_untrusted.size() <= capacity(); }
};

/// Expected trusted identities for a compute split p_1..p_k: sum_i p_i^T.
double sybil_expected_trusted(std::span<const double> allocation, int threshold);

/// Probability that an even m-way split gains trust on all m identities
/// simultaneously: m^(-T*m).
double temporary_majority_probability(int identities, int threshold);

}  // namespace stockade
