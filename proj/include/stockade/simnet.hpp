#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stockade/common.hpp"
#include "stockade/cryptokit.hpp"
#include "stockade/messages.hpp"
#include "stockade/rng.hpp"

namespace stockade {

/// Logical time: (step, phase, sequence). Total order is lexicographic.
struct LogicalTime {
  std::uint64_t step = 0;
  std::uint32_t phase = 0;
  std::uint32_t seq = 0;

  auto operator<=>(const LogicalTime&) const = default;
};

/// Simulator events. Deliveries carry a message to one recipient; ticks make
/// a peer produce its phase output; timeouts close an expectation window.
struct Event {
  enum class Kind : std::uint8_t { Deliver, Tick, Timeout };
  Kind kind = Kind::Tick;
  LogicalTime time;
  std::uint64_t id = 0;  // stable tiebreak
  PeerId peer = kNoPeer;
  Message message;
};

/// Min-queue over (time, id); processing order is a pure function of the
/// inserted events, so equal configs replay byte-identically.
class EventQueue {
 public:
  void push(Event ev);
  bool empty() const { return heap_.empty(); }
  Event pop();

 private:
  std::vector<Event> heap_;
  std::uint64_t next_id_ = 0;
};

/// JSONL trace writer. Every line is appended to an in-memory log and folded
/// into a running digest; sinks with a path also stream to disk at flush.
class TraceSink {
 public:
  explicit TraceSink(HashMode mode) : mode_(mode) {}

  void emit(const LogicalTime& t, const std::string& kind, PeerId actor,
            const std::string& detail);
  void message_event(const LogicalTime& t, const Message& m);

  const std::vector<std::string>& lines() const { return lines_; }
  Digest trace_digest() const;
  std::string final_line() const;  // end-of-run record embedding the digest

 private:
  HashMode mode_;
  std::vector<std::string> lines_;
};

/// Sender-side fault injection on Byzantine-controlled links.
struct FaultSpec {
  enum class Kind : std::uint8_t { Drop, Duplicate, Reorder };
  Kind kind = Kind::Drop;
  PeerId from = kNoPeer;            // must be Byzantine (Drop / Duplicate)
  PeerId to = kNoPeer;              // kNoPeer = all recipients
  std::uint64_t step_from = 0;
  std::uint64_t step_to = UINT64_MAX;
  MsgKind msg_kind = MsgKind::Part;
  bool mutate_payload = false;      // Duplicate: resend with a flipped byte
  std::uint64_t reorder_seed = 0;   // Reorder: reseeds delivery permutations
};

struct TrafficCounters {
  std::uint64_t broadcast_bytes = 0;  // sum of broadcast envelopes (per-peer receive cost)
  std::uint64_t p2p_bytes = 0;        // sum of point-to-point envelopes
  void reset() { broadcast_bytes = 0; p2p_bytes = 0; }
};

/// Broadcast medium with the gossip delivery contract: a message accepted
/// from a sender reaches every honest subscriber before the step barrier
/// closes; per-sender order is preserved while cross-sender interleaving is
/// adversary-controllable (reorder seed). Contradicting re-sends are kept so
/// recipients can evidence the violation; identical re-sends dedup by digest.
class BroadcastChannel {
 public:
  BroadcastChannel(HashMode mode, std::size_t n_peers, std::uint64_t reorder_seed);

  void publish(const Message& m);

  /// Messages of the current phase in the order `recipient` observes them.
  std::vector<Message> collect(PeerId recipient, const LogicalTime& now);

  /// Closes the phase: clears the phase buffer (messages stay in per-sender
  /// logs for audit).
  void end_phase();

  void set_reorder_seed(std::uint64_t seed) { reorder_seed_ = seed; }
  TrafficCounters& counters() { return counters_; }
  const std::vector<std::vector<Message>>& sender_logs() const { return logs_; }

 private:
  HashMode mode_;
  std::uint64_t reorder_seed_;
  std::vector<std::vector<Message>> logs_;  // per-sender, order preserved
  std::vector<Message> phase_buffer_;
  std::vector<Digest> phase_digests_;
  TrafficCounters counters_;
};

/// Reliable point-to-point links with sender-side fault hooks.
class P2PNetwork {
 public:
  P2PNetwork(HashMode mode, std::size_t n_peers);

  void send(const Message& m, PeerId to);
  std::vector<Message> drain(PeerId recipient);

  TrafficCounters& counters() { return counters_; }

 private:
  HashMode mode_;
  std::vector<std::vector<Message>> mailboxes_;
  TrafficCounters counters_;
};

/// Validates a fault plan against the Byzantine roster; honest-honest links
/// are reliable by assumption and rejected here.
void validate_faults(const std::vector<FaultSpec>& faults, const std::vector<bool>& byzantine);

}  // namespace stockade
