#pragma once

// Deterministic stand-in for the short-range radio link: named entities,
// FIFO inboxes, a logical clock and a verbatim byte trace.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsa/crypto.hpp"
#include "gsa/protocol.hpp"

namespace gsa::harness {

struct TraceEntry {
  std::uint64_t seq = 0;
  std::int64_t time = 0;
  std::string from;
  std::string to;
  Bytes frame;  // type byte + payload, exactly as sent
  bool dropped = false;
};

class SimTransport {
 public:
  explicit SimTransport(Rng rng, double drop_probability = 0.0);

  std::int64_t now() const { return clock_; }
  void advance(std::int64_t seconds);

  void add_entity(const std::string& name);
  bool has_entity(const std::string& name) const { return inboxes_.count(name) != 0; }

  /// Devices the verifier can see; ticket frames only reach these.
  void set_detected(const std::string& verifier, std::set<std::string> devices);
  bool detects(const std::string& verifier, const std::string& device) const;

  /// Queues the frame and records it. Returns false if it was dropped or
  /// gated (a ticket to an undetected device is neither sent nor traced).
  bool send(const std::string& from, const std::string& to, const protocol::Frame& frame);
  /// Sends to every detected device; returns the recipients reached.
  std::vector<std::string> broadcast_detected(const std::string& verifier, const protocol::Frame& frame);

  std::optional<protocol::Frame> receive(const std::string& name);
  /// Pops the next frame of the given type, discarding nothing else.
  std::optional<protocol::Frame> receive(const std::string& name, protocol::FrameType type);
  std::size_t pending(const std::string& name) const;

  const std::vector<TraceEntry>& trace() const { return trace_; }
  /// All delivered frame bytes concatenated, for substring scans.
  Bytes trace_bytes() const;
  Digest trace_digest() const;

 private:
  std::deque<Bytes>& inbox(const std::string& name);

  Rng rng_;
  double drop_probability_;
  std::int64_t clock_ = 0;
  std::uint64_t seq_ = 0;
  std::map<std::string, std::deque<Bytes>> inboxes_;
  std::map<std::string, std::set<std::string>> detected_;
  std::vector<TraceEntry> trace_;
};

}  // namespace gsa::harness
