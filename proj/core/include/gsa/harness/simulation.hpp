#pragma once

// Runs the protocol entities over SimTransport. Every exchange between
// entities goes through frames, so the trace is the full conversation.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gsa/harness/transport.hpp"
#include "gsa/protocol.hpp"

namespace gsa::harness {

struct GroupSetupOutcome {
  std::string outcome;  // "ok", "infeasible" or "incomplete"
  protocol::GroupRoster roster;
};

struct AccreditOutcome {
  std::string outcome;  // "ok" when a verdict came back, else why not
  std::optional<protocol::AccreditationResult> result;
};

class Simulation {
 public:
  Simulation(const protocol::SystemConfig& config, std::string verifier_id, double drop_probability = 0.0);

  /// Registration (PIN + keys) and, with `card`, a credit purchase.
  void add_user(const std::string& name, const std::string& identifier, std::optional<payment::Amount> card,
                bool detected = true);

  /// members[0] leads.
  GroupSetupOutcome group_setup(const std::vector<std::string>& members);
  /// Issues a ticket and broadcasts it to every detected device.
  protocol::Ticket issue_ticket(const std::string& terms = {});
  /// `withhold` members do not sign; the rest still claim the full size.
  AccreditOutcome accredit(const std::vector<std::string>& withhold = {});
  /// The master resends its last Msg'.
  AccreditOutcome replay();
  payment::Settlement pay(const std::vector<std::string>& payers);
  void advance(std::int64_t seconds) { transport_.advance(seconds); }

  SimTransport& transport() { return transport_; }
  const SimTransport& transport() const { return transport_; }
  const protocol::ServiceProvider& sp() const { return sp_; }
  const protocol::VerifyingDevice& verifier() const { return verifier_; }
  const protocol::UserApp& user(const std::string& name) const;
  std::vector<std::string> identifiers() const;
  /// Every pseudonym of every registered user.
  std::vector<std::string> pseudonyms() const;
  const std::vector<payment::Settlement>& settlements() const { return settlements_; }

  static constexpr const char* kSpName = "sp";

 private:
  protocol::UserApp& user_mut(const std::string& name);
  std::optional<protocol::Ticket> take_ticket(const std::string& name);
  AccreditOutcome deliver_msg_prime(const Bytes& payload);

  protocol::SystemConfig config_;
  Rng root_;
  protocol::ServiceProvider sp_;
  protocol::VerifyingDevice verifier_;
  SimTransport transport_;
  Rng group_rng_;
  std::map<std::string, std::unique_ptr<protocol::UserApp>> users_;
  std::vector<std::string> detected_;
  std::vector<std::string> group_;
  std::map<std::string, protocol::Ticket> tickets_held_;
  std::optional<protocol::Ticket> session_ticket_;
  std::optional<Bytes> last_msg_prime_;
  std::vector<payment::Settlement> settlements_;
};

/// Identifiers longer than d digits that occur anywhere in `bytes`.
std::size_t identifier_hits(ByteView bytes, const std::vector<std::string>& identifiers, std::size_t d);
/// Identifier substrings plus pseudonyms matching a whole digit token.
std::size_t settlement_hits(std::string_view text, const std::vector<std::string>& identifiers,
                            const std::vector<std::string>& pseudonyms);

}  // namespace gsa::harness
