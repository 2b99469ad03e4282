#include "gsa/harness/simulation.hpp"

#include <algorithm>
#include <set>

#include "gsa/errors.hpp"

namespace gsa::harness {

using protocol::Frame;
using protocol::FrameType;

namespace {

Bytes hello_payload(const Digest& salt) {
  Writer w;
  w.u16(protocol::kWireVersion).field(ByteView(salt));
  return std::move(w).take();
}

Digest hello_salt(ByteView payload) {
  Reader r(payload);
  r.expect_version(protocol::kWireVersion);
  const auto s = r.field();
  r.expect_end();
  if (s.size() != 32) throw ParseError("group salt must be 32 bytes");
  Digest d{};
  std::copy(s.begin(), s.end(), d.begin());
  return d;
}

Bytes u32_payload(std::uint32_t v) {
  Writer w;
  w.u16(protocol::kWireVersion).field_u32(v);
  return std::move(w).take();
}

std::uint32_t u32_from(ByteView payload) {
  Reader r(payload);
  r.expect_version(protocol::kWireVersion);
  const auto v = r.field_u32();
  r.expect_end();
  return v;
}

Bytes text_payload(std::string_view s) {
  Writer w;
  w.u16(protocol::kWireVersion).field(s);
  return std::move(w).take();
}

std::string text_from(ByteView payload) {
  Reader r(payload);
  r.expect_version(protocol::kWireVersion);
  auto s = r.field_string();
  r.expect_end();
  return s;
}

}  // namespace

Simulation::Simulation(const protocol::SystemConfig& config, std::string verifier_id, double drop_probability)
    : config_(config),
      root_(config.seed),
      sp_(protocol::ServiceProvider::system_setup(config)),
      verifier_(verifier_id, sp_.info(), root_.fork("verifier")),
      transport_(root_.fork("transport"), drop_probability),
      group_rng_(root_.fork("group")) {
  transport_.add_entity(verifier_.id());
  transport_.add_entity(kSpName);
}

void Simulation::add_user(const std::string& name, const std::string& identifier,
                          std::optional<payment::Amount> card, bool detected) {
  if (users_.count(name) || name == kSpName || name == verifier_.id())
    throw ConfigurationError("duplicate entity name " + name);
  auto id = keymgmt::UserIdentifier::parse(identifier);
  const auto pin = sp_.issue_pin(id);
  auto app = std::make_unique<protocol::UserApp>(id, sp_.register_user(pin, id), root_.fork("user:" + name));
  if (card) app->load_card(sp_.sell_card(*card).code);
  users_[name] = std::move(app);
  transport_.add_entity(name);
  if (detected) detected_.push_back(name);
  transport_.set_detected(verifier_.id(), std::set<std::string>(detected_.begin(), detected_.end()));
}

const protocol::UserApp& Simulation::user(const std::string& name) const {
  auto it = users_.find(name);
  if (it == users_.end()) throw ConfigurationError("unknown user " + name);
  return *it->second;
}

protocol::UserApp& Simulation::user_mut(const std::string& name) {
  return const_cast<protocol::UserApp&>(user(name));
}

std::vector<std::string> Simulation::identifiers() const {
  std::vector<std::string> out;
  for (const auto& [_, u] : users_) out.push_back(u->identifier().digits);
  return out;
}

std::vector<std::string> Simulation::pseudonyms() const {
  std::set<std::string> all;
  for (const auto& [_, u] : users_) all.insert(u->key_vector().entries.begin(), u->key_vector().entries.end());
  return {all.begin(), all.end()};
}

GroupSetupOutcome Simulation::group_setup(const std::vector<std::string>& members) {
  if (members.empty()) throw ConfigurationError("group_setup needs members");
  if (members.size() > config_.n_max) throw ConfigurationError("group larger than n_max");
  std::set<std::string> distinct(members.begin(), members.end());
  if (distinct.size() != members.size()) throw ConfigurationError("a member is listed twice");
  for (const auto& m : members) user(m);

  group_.clear();
  const std::string& master = members.front();
  Digest salt{};
  group_rng_.fill(salt);

  for (std::size_t i = 1; i < members.size(); ++i)
    transport_.send(master, members[i], Frame{FrameType::GroupHello, hello_payload(salt)});
  std::vector<std::vector<Digest>> digests{user(master).position_digests(salt)};
  for (std::size_t i = 1; i < members.size(); ++i) {
    auto hello = transport_.receive(members[i], FrameType::GroupHello);
    if (!hello) continue;
    const auto own = user(members[i]).position_digests(hello_salt(hello->payload));
    transport_.send(members[i], master, Frame{FrameType::PositionDigests, protocol::encode_digests(own)});
  }
  for (std::size_t i = 1; i < members.size(); ++i) {
    auto f = transport_.receive(master, FrameType::PositionDigests);
    if (!f) return {"incomplete", {}};
    digests.push_back(protocol::decode_digests(f->payload));
  }

  const auto j = protocol::agree_on_digests(digests, config_.key_params);
  for (std::size_t i = 1; i < members.size(); ++i)
    transport_.send(master, members[i], Frame{FrameType::IndexAnnounce, u32_payload(j ? static_cast<std::uint32_t>(*j) : 0)});
  if (!j) {
    for (std::size_t i = 1; i < members.size(); ++i) transport_.receive(members[i], FrameType::IndexAnnounce);
    return {"infeasible", {}};
  }

  for (std::size_t i = 1; i < members.size(); ++i) {
    auto f = transport_.receive(members[i], FrameType::IndexAnnounce);
    if (!f) continue;
    const auto pj = u32_from(f->payload);
    transport_.send(members[i], master, Frame{FrameType::PseudonymReveal, text_payload(user(members[i]).pseudonym_at(pj))});
  }
  protocol::GroupRoster roster{*j, {user(master).pseudonym_at(*j)}};
  for (std::size_t i = 1; i < members.size(); ++i) {
    auto f = transport_.receive(master, FrameType::PseudonymReveal);
    if (!f) return {"incomplete", {}};
    roster.pseudonyms.push_back(text_from(f->payload));
  }

  user_mut(master).join_group(roster, protocol::Mode::Master);
  for (std::size_t i = 1; i < members.size(); ++i) {
    transport_.send(master, members[i], Frame{FrameType::Roster, roster.encode()});
    auto f = transport_.receive(members[i], FrameType::Roster);
    if (!f) return {"incomplete", roster};
    user_mut(members[i]).join_group(protocol::GroupRoster::decode(f->payload), protocol::Mode::Slave);
  }
  group_ = members;
  return {"ok", roster};
}

protocol::Ticket Simulation::issue_ticket(const std::string& terms) {
  auto ticket = verifier_.issue_ticket(transport_.now(), terms);
  const auto reached = transport_.broadcast_detected(verifier_.id(), Frame{FrameType::Ticket, ticket.encode()});
  for (const auto& device : reached) {
    if (auto t = take_ticket(device)) tickets_held_[device] = *t;
  }
  return ticket;
}

std::optional<protocol::Ticket> Simulation::take_ticket(const std::string& name) {
  auto f = transport_.receive(name, FrameType::Ticket);
  if (!f) return std::nullopt;
  return protocol::Ticket::decode(f->payload);
}

AccreditOutcome Simulation::accredit(const std::vector<std::string>& withhold) {
  if (group_.empty()) return {"no-group", std::nullopt};
  const std::string& master = group_.front();
  for (const auto& w : withhold) {
    if (w == master) throw ConfigurationError("the master cannot withhold");
    if (std::find(group_.begin(), group_.end(), w) == group_.end())
      throw ConfigurationError(w + " is not in the group");
  }
  auto held = tickets_held_.find(master);
  if (held == tickets_held_.end()) return {"no-ticket", std::nullopt};
  const protocol::Ticket ticket = held->second;
  auto& lead = user_mut(master);
  const protocol::AccreditationMessage msg{ticket, lead.roster().pseudonyms};

  for (std::size_t i = 1; i < group_.size(); ++i) {
    const auto& name = group_[i];
    if (std::find(withhold.begin(), withhold.end(), name) != withhold.end()) continue;
    auto t = tickets_held_.find(name);
    if (t == tickets_held_.end() || !(t->second == ticket)) continue;
    auto partial = user_mut(name).sign_ticket(msg);
    transport_.send(name, master, Frame{FrameType::PartialSignature, partial.serialize()});
  }

  std::vector<ibdt::PartialSignature> partials{lead.sign_ticket(msg)};
  std::set<std::string> have{lead.own_pseudonym()};
  while (auto f = transport_.receive(master, FrameType::PartialSignature)) {
    auto p = ibdt::PartialSignature::deserialize(f->payload);
    if (have.insert(p.signer_identity).second) partials.push_back(std::move(p));
  }
  for (std::size_t i = 1; i < group_.size(); ++i) {
    const auto& pseudonym = msg.pseudonyms[i];
    if (have.count(pseudonym)) continue;
    if (std::find(withhold.begin(), withhold.end(), group_[i]) == withhold.end())
      return {"incomplete", std::nullopt};
    // Free riders: a share of the master's relabelled as the missing one.
    auto padded = lead.sign_ticket(msg);
    padded.signer_identity = pseudonym;
    partials.push_back(std::move(padded));
  }

  const auto sigma = lead.combine(msg, partials);
  last_msg_prime_ = protocol::encode_msg_prime(msg, sigma);
  session_ticket_ = ticket;
  return deliver_msg_prime(*last_msg_prime_);
}

AccreditOutcome Simulation::deliver_msg_prime(const Bytes& payload) {
  const std::string& master = group_.front();
  if (!transport_.send(master, verifier_.id(), Frame{FrameType::MsgPrime, payload})) return {"dropped", std::nullopt};
  auto f = transport_.receive(verifier_.id(), FrameType::MsgPrime);
  const auto result = verifier_.accredit(f->payload, transport_.now());
  for (const auto& m : group_) transport_.send(verifier_.id(), m, Frame{FrameType::Verdict, result.encode()});
  std::optional<protocol::AccreditationResult> seen;
  for (const auto& m : group_) {
    auto v = transport_.receive(m, FrameType::Verdict);
    if (v && m == master) seen = protocol::AccreditationResult::decode(v->payload);
  }
  if (!seen) return {"dropped", std::nullopt};
  return {"ok", seen};
}

AccreditOutcome Simulation::replay() {
  if (!last_msg_prime_ || group_.empty()) return {"nothing-to-replay", std::nullopt};
  return deliver_msg_prime(*last_msg_prime_);
}

payment::Settlement Simulation::pay(const std::vector<std::string>& payers) {
  if (payers.empty()) throw ConfigurationError("pay needs at least one payer");
  if (!session_ticket_) throw ConfigurationError("pay before any accreditation");
  const auto ticket = *session_ticket_;
  for (const auto& name : payers) {
    auto c = user_mut(name).pay(ticket);
    if (!c) throw ConfigurationError(name + " holds no pay code");
    transport_.send(name, verifier_.id(), Frame{FrameType::PaymentCiphertext, protocol::encode_payment(ticket.ticket_id, *c)});
  }
  std::vector<payment::PaymentCiphertext> cts;
  while (auto f = transport_.receive(verifier_.id(), FrameType::PaymentCiphertext)) {
    auto [tid, c] = protocol::decode_payment(f->payload);
    if (tid != ticket.ticket_id) continue;
    transport_.send(verifier_.id(), kSpName, Frame{FrameType::PaymentCiphertext, f->payload});
    cts.push_back(std::move(c));
  }
  payment::Settlement s;
  s.ticket = ticket.ticket_id;
  s.reason = payment::DeclineReason::SessionMismatch;
  std::vector<payment::PaymentCiphertext> at_sp;
  while (auto f = transport_.receive(kSpName, FrameType::PaymentCiphertext))
    at_sp.push_back(protocol::decode_payment(f->payload).second);
  if (!at_sp.empty()) s = verifier_.forward_payments(sp_, ticket.ticket_id, at_sp);

  transport_.send(kSpName, verifier_.id(), Frame{FrameType::SettlementReceipt, s.encode()});
  transport_.receive(verifier_.id(), FrameType::SettlementReceipt);
  for (const auto& name : payers) {
    transport_.send(verifier_.id(), name, Frame{FrameType::SettlementReceipt, s.encode()});
    transport_.receive(name, FrameType::SettlementReceipt);
  }
  settlements_.push_back(s);
  return s;
}

std::size_t identifier_hits(ByteView bytes, const std::vector<std::string>& identifiers, std::size_t d) {
  std::size_t hits = 0;
  for (const auto& id : identifiers) {
    if (id.size() <= d) continue;
    const auto needle = as_bytes(id);
    if (std::search(bytes.begin(), bytes.end(), needle.begin(), needle.end()) != bytes.end()) ++hits;
  }
  return hits;
}

std::size_t settlement_hits(std::string_view text, const std::vector<std::string>& identifiers,
                            const std::vector<std::string>& pseudonyms) {
  std::size_t hits = 0;
  for (const auto& id : identifiers)
    if (text.find(id) != std::string_view::npos) ++hits;
  const std::set<std::string> names(pseudonyms.begin(), pseudonyms.end());
  auto is_token_char = [](char c) { return (c >= '0' && c <= '9') || c == '.'; };
  for (std::size_t i = 0; i < text.size();) {
    if (!is_token_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_token_char(text[j])) ++j;
    if (names.count(std::string(text.substr(i, j - i)))) ++hits;
    i = j;
  }
  return hits;
}

}  // namespace gsa::harness
