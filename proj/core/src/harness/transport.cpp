#include "gsa/harness/transport.hpp"

#include "gsa/errors.hpp"

namespace gsa::harness {

SimTransport::SimTransport(Rng rng, double drop_probability) : rng_(std::move(rng)), drop_probability_(drop_probability) {
  if (drop_probability < 0.0 || drop_probability > 1.0) throw ConfigurationError("drop probability must be in [0, 1]");
}

void SimTransport::advance(std::int64_t seconds) {
  if (seconds < 0) throw ContractViolation("the clock only moves forward");
  clock_ += seconds;
}

void SimTransport::add_entity(const std::string& name) { inboxes_.try_emplace(name); }

void SimTransport::set_detected(const std::string& verifier, std::set<std::string> devices) {
  detected_[verifier] = std::move(devices);
}

bool SimTransport::detects(const std::string& verifier, const std::string& device) const {
  auto it = detected_.find(verifier);
  return it != detected_.end() && it->second.count(device) != 0;
}

std::deque<Bytes>& SimTransport::inbox(const std::string& name) {
  auto it = inboxes_.find(name);
  if (it == inboxes_.end()) throw ContractViolation("unknown entity " + name);
  return it->second;
}

bool SimTransport::send(const std::string& from, const std::string& to, const protocol::Frame& frame) {
  auto& box = inbox(to);
  if (frame.type == protocol::FrameType::Ticket && !detects(from, to)) return false;
  TraceEntry e{seq_++, clock_, from, to, frame.encode(), false};
  // Drawn only when drops are enabled so the default stream stays untouched.
  if (drop_probability_ > 0.0) {
    const double u = static_cast<double>(rng_.next_u64() >> 11) * 0x1.0p-53;
    e.dropped = u < drop_probability_;
  }
  if (!e.dropped) box.push_back(e.frame);
  const bool delivered = !e.dropped;
  trace_.push_back(std::move(e));
  return delivered;
}

std::vector<std::string> SimTransport::broadcast_detected(const std::string& verifier, const protocol::Frame& frame) {
  std::vector<std::string> reached;
  auto it = detected_.find(verifier);
  if (it == detected_.end()) return reached;
  for (const auto& device : it->second)
    if (has_entity(device) && send(verifier, device, frame)) reached.push_back(device);
  return reached;
}

std::optional<protocol::Frame> SimTransport::receive(const std::string& name) {
  auto& box = inbox(name);
  if (box.empty()) return std::nullopt;
  auto f = protocol::Frame::decode(box.front());
  box.pop_front();
  return f;
}

std::optional<protocol::Frame> SimTransport::receive(const std::string& name, protocol::FrameType type) {
  auto& box = inbox(name);
  for (auto it = box.begin(); it != box.end(); ++it) {
    if (it->empty() || static_cast<protocol::FrameType>((*it)[0]) != type) continue;
    auto f = protocol::Frame::decode(*it);
    box.erase(it);
    return f;
  }
  return std::nullopt;
}

std::size_t SimTransport::pending(const std::string& name) const {
  auto it = inboxes_.find(name);
  return it == inboxes_.end() ? 0 : it->second.size();
}

Bytes SimTransport::trace_bytes() const {
  Bytes out;
  for (const auto& e : trace_) out.insert(out.end(), e.frame.begin(), e.frame.end());
  return out;
}

Digest SimTransport::trace_digest() const {
  Writer w;
  w.u16(1).u64(trace_.size());
  for (const auto& e : trace_)
    w.u64(e.seq).field_i64(e.time).field(e.from).field(e.to).field(e.frame).field_u8(e.dropped ? 1 : 0);
  return sha256("gsa.harness.trace", {w.bytes()});
}

}  // namespace gsa::harness
