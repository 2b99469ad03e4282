#include "gsa/protocol.hpp"

#include <algorithm>

#include "gsa/errors.hpp"

namespace gsa::protocol {

using namespace gsa::ibdt;
using keymgmt::KeyParams;
using keymgmt::KeyVector;
using keymgmt::UserIdentifier;

namespace {

constexpr std::size_t kPseudonymMaxLength = 32;

TicketId read_ticket_id(Reader& r) {
  const auto raw = r.field();
  TicketId id{};
  if (raw.size() != id.size()) throw ParseError("ticket id must be 16 bytes");
  std::copy(raw.begin(), raw.end(), id.begin());
  return id;
}

IdentityUniverse universe_for(const KeyParams& p) {
  return p.positions > keymgmt::kMaxCompactPositions ? IdentityUniverse::pseudonyms(kPseudonymMaxLength)
                                                     : IdentityUniverse::decimal_digits(kPseudonymMaxLength);
}

}  // namespace

void SystemConfig::validate() const {
  if (key_params.positions == 0) throw ConfigurationError("l must be at least 1");
  if (key_params.digits == 0 || key_params.digits > keymgmt::kMaxDigits)
    throw ConfigurationError("d must be in [1, 18]");
  if (n_max == 0 || n_max > kMaxThresholdBound) throw ConfigurationError("n_max out of range");
  if (lambda != kSupportedLambda) throw ConfigurationError("only lambda = 128 is supported");
  if (ticket_validity <= 0) throw ConfigurationError("ticket validity must be positive");
  for (std::size_t t = 1; t <= n_max; ++t) {
    auto it = price_table.find(t);
    if (it == price_table.end()) throw ConfigurationError("price table has no entry for t = " + std::to_string(t));
    if (it->second < 0) throw ConfigurationError("negative price for t = " + std::to_string(t));
  }
}

std::map<std::size_t, Amount> SystemConfig::linear_prices(std::size_t n_max, Amount per_member) {
  std::map<std::size_t, Amount> out;
  for (std::size_t t = 1; t <= n_max; ++t) out[t] = per_member * static_cast<Amount>(t);
  return out;
}

Amount PublicSystemInfo::price(std::size_t t) const {
  auto it = config.price_table.find(t);
  if (it == config.price_table.end()) throw PolicyError("no price for a group of " + std::to_string(t));
  return it->second;
}

// ---------------------------------------------------------------- SP

ServiceProvider::ServiceProvider(PublicSystemInfo info, MasterSecretKey msk, payment::SpKeyPair pke, Rng rng)
    : info_(std::move(info)),
      msk_(std::move(msk)),
      pke_(pke),
      rng_(std::move(rng)),
      ledger_(std::make_unique<payment::CardLedger>()) {
  rng_.fill(salt_);
}

ServiceProvider ServiceProvider::system_setup(const SystemConfig& config) {
  config.validate();
  const Rng root(config.seed);
  Rng ibdt_rng = root.fork("ibdt");
  Rng pke_rng = root.fork("pke");
  auto sr = setup(config.lambda, universe_for(config.key_params), config.n_max, ibdt_rng);
  PublicSystemInfo info;
  info.config = config;
  info.pms = std::move(sr.pms);
  info.mpk = sr.keys.mpk;
  auto pke = payment::SpKeyPair::generate(pke_rng);
  info.sp_key = pke.public_key;
  return ServiceProvider(std::move(info), sr.keys.msk, pke, root.fork("sp"));
}

Digest ServiceProvider::identifier_digest(const UserIdentifier& id) const {
  return sha256("gsa.sp.identifier", {ByteView(salt_), as_bytes(id.digits)});
}

std::string ServiceProvider::issue_pin(const UserIdentifier& id) {
  // Refuse identifiers that cannot carry a key vector up front.
  keymgmt::derive_key_vector(id, info_.config.key_params);
  for (;;) {
    std::array<std::uint8_t, 10> raw{};
    rng_.fill(raw);
    auto pin = payment::base32(raw);
    if (registry_.count(pin)) continue;
    registry_[pin] = RegistrationRecord{pin, identifier_digest(id), false};
    return pin;
  }
}

RegistrationBundle ServiceProvider::register_user(std::string_view pin, const UserIdentifier& id) {
  auto it = registry_.find(std::string(pin));
  if (it == registry_.end()) throw AuthError("unknown PIN");
  if (it->second.issued) throw ReplayError("PIN already redeemed");
  if (it->second.identifier_digest != identifier_digest(id)) throw AuthError("PIN was issued for another identifier");

  RegistrationBundle out;
  out.key_vector = keymgmt::derive_key_vector(id, info_.config.key_params);
  for (const auto& pseudonym : out.key_vector.entries)
    out.secret_keys.push_back(keygen(info_.pms, info_.mpk, msk_, pseudonym));
  out.info = info_;
  it->second.issued = true;
  return out;
}

payment::ScratchCard ServiceProvider::sell_card(Amount denomination) {
  return ledger_->issue_card(denomination, rng_);
}

payment::Settlement ServiceProvider::settle(const TicketId& ticket, Amount amount,
                                            const std::vector<payment::PaymentCiphertext>& ciphertexts) {
  return ledger_->settle(pke_, ticket, amount, ciphertexts);
}

// ---------------------------------------------------------------- messages

Bytes Ticket::encode() const {
  Writer w;
  w.u16(kWireVersion)
      .field(ByteView(ticket_id))
      .field(verifier_id)
      .field_i64(issued_at)
      .field_i64(validity_window)
      .field(service_terms);
  return std::move(w).take();
}

Ticket Ticket::decode(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kWireVersion);
  Ticket t;
  t.ticket_id = read_ticket_id(r);
  t.verifier_id = r.field_string();
  t.issued_at = r.field_i64();
  t.validity_window = r.field_i64();
  t.service_terms = r.field_string();
  r.expect_end();
  return t;
}

Bytes canonical_encode(const AccreditationMessage& msg) {
  Writer w;
  w.u16(kWireVersion).field(msg.ticket.encode()).field_strings(msg.pseudonyms);
  return std::move(w).take();
}

AccreditationMessage canonical_decode(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kWireVersion);
  AccreditationMessage msg;
  msg.ticket = Ticket::decode(r.field());
  msg.pseudonyms = r.field_strings();
  r.expect_end();
  return msg;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Granted: return "granted";
    case Verdict::Penalized: return "penalized";
    case Verdict::Rejected: return "rejected";
  }
  return "unknown";
}

Bytes AccreditationResult::encode() const {
  Writer w;
  w.u16(kWireVersion)
      .field(ByteView(ticket_id))
      .field_u8(static_cast<std::uint8_t>(verdict))
      .field_u32(static_cast<std::uint32_t>(group_size))
      .field_i64(amount_due)
      .field(reason);
  return std::move(w).take();
}

AccreditationResult AccreditationResult::decode(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kWireVersion);
  AccreditationResult out;
  out.ticket_id = read_ticket_id(r);
  const auto v = r.field_u8();
  if (v < 1 || v > 3) throw ParseError("unknown verdict");
  out.verdict = static_cast<Verdict>(v);
  out.group_size = r.field_u32();
  out.amount_due = r.field_i64();
  out.reason = r.field_string();
  r.expect_end();
  return out;
}

Bytes GroupRoster::encode() const {
  Writer w;
  w.u16(kWireVersion).field_u32(static_cast<std::uint32_t>(j)).field_strings(pseudonyms);
  return std::move(w).take();
}

GroupRoster GroupRoster::decode(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kWireVersion);
  GroupRoster out;
  out.j = r.field_u32();
  out.pseudonyms = r.field_strings();
  r.expect_end();
  return out;
}

Bytes encode_msg_prime(const AccreditationMessage& msg, const CombinedSignature& sigma) {
  Writer w;
  w.u16(kWireVersion).field(canonical_encode(msg)).field(sigma.serialize());
  return std::move(w).take();
}

std::pair<AccreditationMessage, Bytes> decode_msg_prime(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kWireVersion);
  auto msg = canonical_decode(r.field());
  const auto sigma = r.field();
  r.expect_end();
  return {std::move(msg), Bytes(sigma.begin(), sigma.end())};
}

Bytes encode_digests(const std::vector<Digest>& digests) {
  std::vector<Bytes> items;
  for (const auto& d : digests) items.emplace_back(d.begin(), d.end());
  Writer w;
  w.u16(kWireVersion).field_list(items);
  return std::move(w).take();
}

std::vector<Digest> decode_digests(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kWireVersion);
  std::vector<Digest> out;
  for (const auto& item : r.field_list()) {
    if (item.size() != 32) throw ParseError("position digest must be 32 bytes");
    Digest d{};
    std::copy(item.begin(), item.end(), d.begin());
    out.push_back(d);
  }
  r.expect_end();
  return out;
}

Bytes encode_payment(const TicketId& ticket, const payment::PaymentCiphertext& c) {
  Writer w;
  w.u16(kWireVersion).field(ByteView(ticket)).field(c.bytes);
  return std::move(w).take();
}

std::pair<TicketId, payment::PaymentCiphertext> decode_payment(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kWireVersion);
  auto ticket = read_ticket_id(r);
  const auto c = r.field();
  r.expect_end();
  return {ticket, payment::PaymentCiphertext{Bytes(c.begin(), c.end())}};
}

std::string_view frame_name(FrameType t) {
  switch (t) {
    case FrameType::Ticket: return "ticket";
    case FrameType::PartialSignature: return "partial-signature";
    case FrameType::MsgPrime: return "msg-prime";
    case FrameType::Verdict: return "verdict";
    case FrameType::PaymentCiphertext: return "payment-ciphertext";
    case FrameType::SettlementReceipt: return "settlement-receipt";
    case FrameType::GroupHello: return "group-hello";
    case FrameType::PositionDigests: return "position-digests";
    case FrameType::IndexAnnounce: return "index-announce";
    case FrameType::PseudonymReveal: return "pseudonym-reveal";
    case FrameType::Roster: return "roster";
  }
  return "unknown";
}

Bytes Frame::encode() const {
  Bytes out;
  out.reserve(1 + payload.size());
  out.push_back(static_cast<std::uint8_t>(type));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Frame Frame::decode(ByteView bytes) {
  if (bytes.empty()) throw ParseError("empty frame");
  const auto t = static_cast<FrameType>(bytes[0]);
  if (frame_name(t) == "unknown") throw ParseError("unknown frame type");
  return Frame{t, Bytes(bytes.begin() + 1, bytes.end())};
}

// ---------------------------------------------------------------- users

UserApp::UserApp(UserIdentifier id, RegistrationBundle bundle, Rng rng)
    : id_(std::move(id)), bundle_(std::move(bundle)), rng_(std::move(rng)) {
  const auto& kv = bundle_.key_vector;
  if (kv != keymgmt::derive_key_vector(id_, bundle_.info.config.key_params))
    throw AuthError("key vector does not match the identifier");
  if (bundle_.secret_keys.size() != kv.entries.size()) throw AuthError("one secret key per pseudonym expected");
  for (std::size_t i = 0; i < kv.entries.size(); ++i) {
    const auto& sk = bundle_.secret_keys[i];
    if (sk.identity != kv.entries[i] || !key_is_consistent(bundle_.info.pms, bundle_.info.mpk, sk))
      throw AuthError("secret key for " + kv.entries[i] + " failed the sanity check");
  }
}

std::vector<Digest> UserApp::position_digests(const Digest& salt) const {
  std::vector<Digest> out;
  const auto& entries = bundle_.key_vector.entries;
  for (std::size_t j = 1; j <= entries.size(); ++j) {
    Writer pos;
    pos.u64(j);
    out.push_back(sha256("gsa.group.position", {ByteView(salt), pos.bytes(), as_bytes(entries[j - 1])}));
  }
  return out;
}

const ibdt::IdentitySecretKey& UserApp::key_for(const std::string& pseudonym) const {
  const auto& entries = bundle_.key_vector.entries;
  auto it = std::find(entries.begin(), entries.end(), pseudonym);
  if (it == entries.end()) throw PolicyError("no key for pseudonym " + pseudonym);
  return bundle_.secret_keys[static_cast<std::size_t>(it - entries.begin())];
}

void UserApp::join_group(const GroupRoster& roster, Mode mode) {
  if (roster.j < 1 || roster.j > bundle_.key_vector.entries.size()) throw PolicyError("agreed position out of range");
  const auto& own = pseudonym_at(roster.j);
  if (std::find(roster.pseudonyms.begin(), roster.pseudonyms.end(), own) == roster.pseudonyms.end())
    throw PolicyError("roster does not list this member");
  if (mode == Mode::Master && roster.pseudonyms.front() != own) throw PolicyError("the master is listed first");
  const auto gamma = ThresholdPolicy::all_of(roster.pseudonyms);
  const auto& sk = key_for(own);
  sign_pre_ = sign_precompute(bundle_.info.pms, bundle_.info.mpk, sk, gamma);
  comb_pre_.reset();
  if (mode == Mode::Master) comb_pre_ = comb_precompute(bundle_.info.pms, bundle_.info.mpk, sk, gamma);
  mode_ = mode;
  roster_ = roster;
}

const GroupRoster& UserApp::roster() const {
  if (!roster_) throw ContractViolation("not in a group");
  return *roster_;
}

const std::string& UserApp::own_pseudonym() const { return pseudonym_at(roster().j); }

PartialSignature UserApp::sign_ticket(const AccreditationMessage& msg) {
  if (msg.pseudonyms != roster().pseudonyms) throw PolicyError("message lists a different group");
  return fast_sign(*sign_pre_, canonical_encode(msg), msg.policy(), rng_);
}

CombinedSignature UserApp::combine(const AccreditationMessage& msg, const std::vector<PartialSignature>& partials) {
  if (mode_ != Mode::Master || !comb_pre_) throw ContractViolation("only the master combines");
  if (msg.pseudonyms != roster().pseudonyms) throw PolicyError("message lists a different group");
  return fast_comb(*comb_pre_, canonical_encode(msg), partials);
}

std::optional<payment::PaymentCiphertext> UserApp::pay(const Ticket& ticket) {
  if (pay_codes_.empty()) return std::nullopt;
  return payment::encrypt_paycode(bundle_.info.sp_key, ticket.ticket_id, pay_codes_.front(), rng_);
}

// ---------------------------------------------------------------- group setup

std::optional<std::size_t> agree_on_digests(const std::vector<std::vector<Digest>>& digests, const KeyParams& params) {
  std::vector<KeyVector> vectors;
  for (const auto& member : digests) {
    KeyVector kv;
    kv.params = params;
    for (const auto& d : member) kv.entries.push_back(to_hex(d));
    vectors.push_back(std::move(kv));
  }
  auto agreement = keymgmt::agree_index(vectors);
  if (!agreement) return std::nullopt;
  return agreement->j;
}

GroupSession group_setup(const std::vector<UserApp*>& members, Rng& rng) {
  if (members.empty()) throw DomainError("a group needs at least one member");
  const auto& info = members.front()->info();
  if (members.size() > info.config.n_max) throw DomainError("group larger than n_max");
  const auto mpk = info.mpk.serialize();
  for (const auto* m : members)
    if (m->info().sp_key != info.sp_key || m->info().mpk.serialize() != mpk)
      throw DomainError("members are registered with different providers");

  GroupSession session;
  rng.fill(session.salt);
  std::vector<std::vector<Digest>> digests;
  for (const auto* m : members) digests.push_back(m->position_digests(session.salt));
  const auto j = agree_on_digests(digests, info.config.key_params);
  if (!j) return session;

  session.feasible = true;
  session.roster.j = *j;
  for (const auto* m : members) session.roster.pseudonyms.push_back(m->pseudonym_at(*j));
  for (std::size_t i = 0; i < members.size(); ++i) {
    members[i]->join_group(session.roster, i == 0 ? Mode::Master : Mode::Slave);
    ++session.sign_precomputations;
    if (i == 0) ++session.comb_precomputations;
  }
  return session;
}

// ---------------------------------------------------------------- verifier

VerifyingDevice::VerifyingDevice(std::string verifier_id, PublicSystemInfo info, Rng rng)
    : id_(std::move(verifier_id)), info_(std::move(info)), rng_(std::move(rng)) {}

Ticket VerifyingDevice::issue_ticket(std::int64_t now, std::string service_terms) {
  Ticket t;
  do {
    rng_.fill(t.ticket_id);
  } while (issued_.count(t.ticket_id) || used_.count(t.ticket_id));
  t.verifier_id = id_;
  t.issued_at = now;
  t.validity_window = info_.config.ticket_validity;
  t.service_terms = std::move(service_terms);
  issued_[t.ticket_id] = t;
  return t;
}

AccreditationResult VerifyingDevice::reject(const TicketId& t, std::string reason) const {
  AccreditationResult r;
  r.verdict = Verdict::Rejected;
  r.ticket_id = t;
  r.reason = std::move(reason);
  return r;
}

AccreditationResult VerifyingDevice::accredit(const AccreditationMessage& msg, ByteView sigma, std::int64_t now) {
  const auto& id = msg.ticket.ticket_id;
  if (used_.count(id)) return reject(id, "replay");
  auto it = issued_.find(id);
  if (it == issued_.end()) return reject(id, "unknown-ticket");
  if (!(it->second == msg.ticket)) return reject(id, "ticket-mismatch");
  if (now < msg.ticket.issued_at || now - msg.ticket.issued_at > msg.ticket.validity_window)
    return reject(id, "expired");

  const std::size_t t = msg.threshold();
  if (t == 0) return reject(id, "empty-group");
  if (t > info_.config.n_max) return reject(id, "group-too-large");
  std::set<std::string> distinct(msg.pseudonyms.begin(), msg.pseudonyms.end());
  if (distinct.size() != t) return reject(id, "duplicate-pseudonyms");
  try {
    for (const auto& p : msg.pseudonyms) keymgmt::decode_pseudonym(p, info_.config.key_params);
  } catch (const DomainError&) {
    return reject(id, "malformed-pseudonym");
  }

  // The session is over whatever the signature says.
  issued_.erase(it);
  used_.insert(id);

  const auto result = ibdt::verify(info_.pms, info_.mpk, canonical_encode(msg), sigma, msg.policy());
  AccreditationResult out;
  out.ticket_id = id;
  out.group_size = t;
  if (result.valid) {
    out.verdict = Verdict::Granted;
    out.amount_due = info_.price(t);
    out.reason = "ok";
    granted_[id] = out.amount_due;
    return out;
  }
  out.verdict = Verdict::Penalized;
  out.reason = std::string(reason_name(result.reason));
  penalty_log_.push_back(out);
  if (penalty_hook_) penalty_hook_(out);
  return out;
}

AccreditationResult VerifyingDevice::accredit(ByteView msg_prime, std::int64_t now) {
  try {
    auto [msg, sigma] = decode_msg_prime(msg_prime);
    return accredit(msg, sigma, now);
  } catch (const ParseError&) {
    return reject(TicketId{}, "malformed");
  }
}

payment::Settlement VerifyingDevice::forward_payments(ServiceProvider& sp, const TicketId& ticket,
                                                      const std::vector<payment::PaymentCiphertext>& ciphertexts) {
  auto it = granted_.find(ticket);
  if (it == granted_.end()) {
    payment::Settlement s;
    s.ticket = ticket;
    s.reason = payment::DeclineReason::SessionMismatch;
    return s;
  }
  return sp.settle(ticket, it->second, ciphertexts);
}

// ---------------------------------------------------------------- accreditation

AccreditationResult accredit(const std::vector<UserApp*>& members, VerifyingDevice& verifier, const Ticket& ticket,
                             std::int64_t now, const AccreditOptions& options) {
  if (members.empty()) throw ContractViolation("empty group");
  UserApp& master = *members.front();
  for (auto i : options.withheld)
    if (i == 0 || i >= members.size()) throw ContractViolation("withheld index must name a slave");

  AccreditationMessage msg{ticket, master.roster().pseudonyms};
  std::vector<PartialSignature> partials;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!options.withheld.count(i)) {
      partials.push_back(members[i]->sign_ticket(msg));
      continue;
    }
    // The remaining members pad the missing share with a relabelled one
    // of their own to still claim the full size.
    auto padded = master.sign_ticket(msg);
    padded.signer_identity = msg.pseudonyms[i];
    partials.push_back(std::move(padded));
  }
  const auto sigma = master.combine(msg, partials);
  return verifier.accredit(msg, sigma.serialize(), now);
}

}  // namespace gsa::protocol
