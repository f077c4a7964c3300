#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "stockade/common.hpp"
#include "stockade/cryptokit.hpp"
#include "stockade/optim.hpp"
#include "stockade/robustagg.hpp"
#include "stockade/vecmath.hpp"

namespace stockade {

enum class BanCause : std::uint8_t {
  GradientFraud = 0,
  AggregationFraud = 1,
  FalseAccusation = 2,
  ProtocolViolation = 3,
  MutualEliminate = 4,
  CoverUp = 5,
};
constexpr int kBanCauseCount = 6;
const char* ban_cause_name(BanCause cause);

struct BanRecord {
  PeerId peer = kNoPeer;
  std::uint64_t step = 0;
  BanCause cause = BanCause::ProtocolViolation;
};

/// Append-only ban set. Every honest peer derives the same ledger from the
/// broadcast record alone, so equality of ledgers is the consensus check.
class BanLedger {
 public:
  explicit BanLedger(std::size_t n_peers) : banned_(n_peers, false) {}

  bool is_banned(PeerId peer) const { return banned_[peer]; }
  bool ban(PeerId peer, std::uint64_t step, BanCause cause);  // false if already banned
  const std::vector<BanRecord>& records() const { return records_; }
  std::size_t ban_count() const { return records_.size(); }
  std::array<std::uint32_t, kBanCauseCount> counts_by_cause() const;

  Bytes canonical() const;
  Digest digest(HashMode mode) const;

 private:
  std::vector<bool> banned_;
  std::vector<BanRecord> records_;
};

/// Public artifacts of one aggregation round, retained for two steps so
/// validators elected at the end of step t can be judged during step t+1.
/// Built exclusively from broadcast data plus the deterministic model state,
/// hence identical on every honest peer.
struct StepPublicInfo {
  std::uint64_t step = 0;
  Vec x;                                    // model the gradients were taken at
  std::vector<PeerId> participants;         // aggregation ranks, ascending peer id
  PartitionLayout layout;
  Vec tau_eff;                              // clipping radius per partition
  double delta_max = 0.0;
  double grad_clip_lambda = 0.0;            // per-part clip level, 0 = plain variant
  Vec update_aggregate;                     // post-CheckAveraging value fed to SGD
  std::map<PeerId, std::uint64_t> seeds;    // public gradient seeds xi_i
  std::map<PeerId, Digest> commitments;     // whole-gradient hashes
  std::map<PeerId, std::vector<Digest>> part_hashes;
  std::map<std::uint64_t, Digest> agg_hashes;  // by partition rank
  Vec aggregate;                             // merged output used for the SGD step
  std::array<std::uint8_t, 32> randomness{};  // r^t
  std::uint64_t z_seed = 0;
  std::map<PeerId, Vec> checksums;           // s_i^j bundles (n_parts each)
  std::map<PeerId, Vec> norms;               // ||g_i(j) - g_hat(j)|| bundles
  std::map<PeerId, std::vector<std::uint8_t>> flags;
  std::set<std::pair<PeerId, PeerId>> round_one_flags;   // (aggregator, flagged sender)
  std::set<std::pair<std::uint64_t, PeerId>> exclusions; // (partition, excluded sender)

  int rank_of(PeerId peer) const;  // -1 when not a participant
  bool excluded(std::uint64_t partition, PeerId peer) const;
  std::size_t included_count(std::uint64_t partition) const;
};

/// Tolerance for the sum-of-checksums test on one partition. Pairwise scalar
/// comparisons are exact (both sides evaluate the same expression on
/// hash-verified bytes); only the fixed-point residual needs slack:
///   included * 1e-6 * sqrt(part size) * max(1, min(tau, max broadcast norm)).
double checksum_threshold(const StepPublicInfo& info, std::uint64_t partition);

/// Second-round test: do the broadcast checksums of one partition cancel
/// within the threshold? Pure function of broadcast data.
bool partition_checksums_cancel(const StepPublicInfo& info, std::uint64_t partition);

/// True when the partition's aggregator raised a first-round flag against
/// any of its inputs; a flag moves the burden onto the flagged sender, so a
/// non-zero checksum sum no longer incriminates the aggregator.
bool aggregator_flagged_input(const StepPublicInfo& info, PeerId aggregator);

/// 2m distinct peers drawn without replacement from the active set via the
/// shared randomness; the first m check, the last m are their targets.
struct ValidatorElection {
  std::vector<PeerId> checkers;
  std::vector<PeerId> targets;
  int effective_m = 0;  // reduced when fewer than 2m peers remain
};
ValidatorElection elect_validators(const std::array<std::uint8_t, 32>& randomness,
                                   const std::vector<PeerId>& active, int m);

/// The deterministic re-check every peer runs when an accusation names
/// `target` for the round described by `info`: recompute the gradient from
/// the public seed, then compare every committed hash, broadcast norm,
/// checksum and check flag against the recomputation. Aggregators that
/// stayed silent about provably wrong scalars are reported as cover-ups.
struct ReplayVerdict {
  bool guilty = false;
  BanCause cause = BanCause::GradientFraud;
  std::vector<PeerId> coverups;
};
ReplayVerdict accuse_replay(const StepPublicInfo& info, const Objective& objective,
                            HashMode mode, PeerId target);

}  // namespace stockade
