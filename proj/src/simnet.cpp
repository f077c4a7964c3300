#include "stockade/simnet.hpp"

#include <algorithm>

namespace stockade {

namespace {

bool event_after(const Event& a, const Event& b) {
  if (a.time != b.time) return b.time < a.time;
  return b.id < a.id;
}

}  // namespace

void EventQueue::push(Event ev) {
  ev.id = next_id_++;
  heap_.push_back(std::move(ev));
  std::push_heap(heap_.begin(), heap_.end(), event_after);
}

Event EventQueue::pop() {
  if (heap_.empty()) throw StateError("event queue empty");
  std::pop_heap(heap_.begin(), heap_.end(), event_after);
  Event ev = std::move(heap_.back());
  heap_.pop_back();
  return ev;
}

void TraceSink::emit(const LogicalTime& t, const std::string& kind, PeerId actor,
                     const std::string& detail) {
  std::string line = "{\"step\":" + std::to_string(t.step) +
                     ",\"phase\":" + std::to_string(t.phase) +
                     ",\"seq\":" + std::to_string(t.seq) + ",\"kind\":\"" + kind + "\"";
  if (actor != kNoPeer) line += ",\"actor\":" + std::to_string(actor);
  if (!detail.empty()) line += "," + detail;
  line += "}";
  lines_.push_back(std::move(line));
}

void TraceSink::message_event(const LogicalTime& t, const Message& m) {
  emit(t, msg_kind_name(m.kind), m.sender, "\"digest\":\"" + hex(m.digest(mode_)) + "\"");
}

Digest TraceSink::trace_digest() const {
  Bytes buf;
  for (const auto& line : lines_) {
    buf.insert(buf.end(), line.begin(), line.end());
    buf.push_back('\n');
  }
  return hash_bytes(mode_, buf);
}

std::string TraceSink::final_line() const {
  return "{\"kind\":\"end_of_run\",\"trace_digest\":\"" + hex(trace_digest()) + "\"}";
}

BroadcastChannel::BroadcastChannel(HashMode mode, std::size_t n_peers,
                                   std::uint64_t reorder_seed)
    : mode_(mode), reorder_seed_(reorder_seed), logs_(n_peers) {}

void BroadcastChannel::publish(const Message& m) {
  const Digest d = m.digest(mode_);
  // Identical duplicate: idempotent within the phase.
  for (std::size_t i = 0; i < phase_digests_.size(); ++i)
    if (phase_digests_[i] == d) return;
  logs_[m.sender].push_back(m);
  phase_buffer_.push_back(m);
  phase_digests_.push_back(d);
  counters_.broadcast_bytes += m.signed_bytes().size() + 64;
}

std::vector<Message> BroadcastChannel::collect(PeerId recipient, const LogicalTime& now) {
  // Per-sender order stays intact; the interleaving across senders is drawn
  // from the reorder seed, modelling adversary-controlled gossip timing.
  std::vector<std::size_t> order(phase_buffer_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededStream perm(reorder_seed_ ^ (now.step * 0x9E3779B97F4A7C15ULL) ^
                    (static_cast<std::uint64_t>(now.phase) << 32) ^ recipient);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[perm.next_below(i)]);
  // Stable pass restoring per-sender order within the shuffle.
  std::vector<Message> out;
  out.reserve(order.size());
  std::vector<std::size_t> next_per_sender(logs_.size(), 0);
  std::vector<std::vector<std::size_t>> by_sender(logs_.size());
  for (std::size_t i = 0; i < phase_buffer_.size(); ++i)
    by_sender[phase_buffer_[i].sender].push_back(i);
  for (const std::size_t idx : order) {
    const PeerId s = phase_buffer_[idx].sender;
    out.push_back(phase_buffer_[by_sender[s][next_per_sender[s]++]]);
  }
  return out;
}

void BroadcastChannel::end_phase() {
  phase_buffer_.clear();
  phase_digests_.clear();
}

P2PNetwork::P2PNetwork(HashMode mode, std::size_t n_peers)
    : mode_(mode), mailboxes_(n_peers) {}

void P2PNetwork::send(const Message& m, PeerId to) {
  if (to >= mailboxes_.size()) throw StateError("p2p: bad recipient");
  counters_.p2p_bytes += m.signed_bytes().size() + 64;
  mailboxes_[to].push_back(m);
}

std::vector<Message> P2PNetwork::drain(PeerId recipient) {
  std::vector<Message> out;
  out.swap(mailboxes_[recipient]);
  return out;
}

void validate_faults(const std::vector<FaultSpec>& faults, const std::vector<bool>& byzantine) {
  for (const auto& f : faults) {
    if (f.kind == FaultSpec::Kind::Reorder) continue;  // channel-level, threat-model free
    if (f.from == kNoPeer || f.from >= byzantine.size() || !byzantine[f.from])
      throw ConfigError("fault injection outside Byzantine-controlled links");
  }
}

}  // namespace stockade
