#pragma once

// Entity state machines for system setup, registration, credit purchase,
// group setup, size accreditation and payment, plus their wire frames.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsa/bytes.hpp"
#include "gsa/crypto.hpp"
#include "gsa/ibdt.hpp"
#include "gsa/keymgmt.hpp"
#include "gsa/payment.hpp"

namespace gsa::protocol {

using payment::Amount;
using payment::TicketId;

inline constexpr std::uint16_t kWireVersion = 1;

struct SystemConfig {
  keymgmt::KeyParams key_params{4, 1};
  std::size_t n_max = 10;
  std::map<std::size_t, Amount> price_table;  // amount_t for t in [1, n_max]
  std::uint64_t seed = 1;
  unsigned lambda = ibdt::kSupportedLambda;
  std::int64_t ticket_validity = 60;  // seconds

  /// Throws ConfigurationError.
  void validate() const;
  /// A price table of `per_member * t` for every t.
  static std::map<std::size_t, Amount> linear_prices(std::size_t n_max, Amount per_member);
};

/// What the SP publishes: everything a user or verifier needs, no secrets.
struct PublicSystemInfo {
  SystemConfig config;
  ibdt::PublicParams pms;
  ibdt::MasterPublicKey mpk;
  payment::SpPublicKey sp_key{};

  Amount price(std::size_t t) const;
};

struct RegistrationRecord {
  std::string pin;
  Digest identifier_digest{};
  bool issued = false;
};

struct RegistrationBundle {
  keymgmt::KeyVector key_vector;
  std::vector<ibdt::IdentitySecretKey> secret_keys;
  PublicSystemInfo info;
};

class ServiceProvider {
 public:
  /// Generates the IBDT parameters and the payment key pair from config.seed.
  static ServiceProvider system_setup(const SystemConfig& config);

  /// Face-to-face step: hands out a one-time PIN bound to the identifier.
  std::string issue_pin(const keymgmt::UserIdentifier& id);
  /// Throws AuthError for an unknown PIN or a different identifier,
  /// ReplayError for a PIN already redeemed.
  RegistrationBundle register_user(std::string_view pin, const keymgmt::UserIdentifier& id);

  /// Credit purchase: a card sold through a store.
  payment::ScratchCard sell_card(Amount denomination);
  payment::Settlement settle(const TicketId& ticket, Amount amount,
                             const std::vector<payment::PaymentCiphertext>& ciphertexts);

  const PublicSystemInfo& info() const { return info_; }
  const payment::CardLedger& ledger() const { return *ledger_; }
  const std::map<std::string, RegistrationRecord>& registry() const { return registry_; }
  /// Secret material, exposed for leak scans in tests.
  const ibdt::MasterSecretKey& master_secret() const { return msk_; }
  const payment::SpKeyPair& payment_keys() const { return pke_; }

 private:
  ServiceProvider(PublicSystemInfo info, ibdt::MasterSecretKey msk, payment::SpKeyPair pke, Rng rng);
  Digest identifier_digest(const keymgmt::UserIdentifier& id) const;

  PublicSystemInfo info_;
  ibdt::MasterSecretKey msk_;
  payment::SpKeyPair pke_;
  Rng rng_;
  Digest salt_{};
  std::map<std::string, RegistrationRecord> registry_;
  std::unique_ptr<payment::CardLedger> ledger_;
};

struct Ticket {
  TicketId ticket_id{};
  std::string verifier_id;
  std::int64_t issued_at = 0;
  std::int64_t validity_window = 0;
  std::string service_terms;

  Bytes encode() const;
  static Ticket decode(ByteView bytes);
  bool operator==(const Ticket&) const = default;
};

/// Msg = T || pk_1 || ... || pk_t; t is the list length.
struct AccreditationMessage {
  Ticket ticket;
  std::vector<std::string> pseudonyms;

  std::size_t threshold() const { return pseudonyms.size(); }
  ibdt::ThresholdPolicy policy() const { return ibdt::ThresholdPolicy::all_of(pseudonyms); }
  bool operator==(const AccreditationMessage&) const = default;
};

Bytes canonical_encode(const AccreditationMessage& msg);
AccreditationMessage canonical_decode(ByteView bytes);

enum class Verdict : std::uint8_t { Granted = 1, Penalized = 2, Rejected = 3 };
std::string_view verdict_name(Verdict v);

struct AccreditationResult {
  Verdict verdict = Verdict::Rejected;
  std::size_t group_size = 0;
  Amount amount_due = 0;
  std::string reason;
  TicketId ticket_id{};

  bool granted() const { return verdict == Verdict::Granted; }
  Bytes encode() const;
  static AccreditationResult decode(ByteView bytes);
};

/// Agreed group state: position j and the pseudonym roster, master first.
struct GroupRoster {
  std::size_t j = 0;
  std::vector<std::string> pseudonyms;

  Bytes encode() const;
  static GroupRoster decode(ByteView bytes);
};

enum class Mode { Slave, Master };

class UserApp {
 public:
  /// Throws AuthError if the bundle's keys fail the sanity check.
  UserApp(keymgmt::UserIdentifier id, RegistrationBundle bundle, Rng rng);

  const keymgmt::UserIdentifier& identifier() const { return id_; }
  const keymgmt::KeyVector& key_vector() const { return bundle_.key_vector; }
  const PublicSystemInfo& info() const { return bundle_.info; }
  Mode mode() const { return mode_; }

  /// One salted digest per key-vector position, so peers can compare
  /// pseudonyms for equality without seeing them.
  std::vector<Digest> position_digests(const Digest& salt) const;
  const std::string& pseudonym_at(std::size_t j) const { return bundle_.key_vector.at(j); }

  /// Runs the sign precomputation (and the comb precomputation as master).
  void join_group(const GroupRoster& roster, Mode mode);
  bool in_group() const { return roster_.has_value(); }
  const GroupRoster& roster() const;
  const std::string& own_pseudonym() const;

  /// Throws PolicyError if the message lists a different roster.
  ibdt::PartialSignature sign_ticket(const AccreditationMessage& msg);
  /// Master only.
  ibdt::CombinedSignature combine(const AccreditationMessage& msg, const std::vector<ibdt::PartialSignature>& partials);

  void load_card(std::string code) { pay_codes_.push_back(std::move(code)); }
  const std::vector<std::string>& pay_codes() const { return pay_codes_; }
  /// Encrypts the first loaded code under the pinned SP key; nullopt without codes.
  std::optional<payment::PaymentCiphertext> pay(const Ticket& ticket);

 private:
  const ibdt::IdentitySecretKey& key_for(const std::string& pseudonym) const;

  keymgmt::UserIdentifier id_;
  RegistrationBundle bundle_;
  Rng rng_;
  Mode mode_ = Mode::Slave;
  std::optional<GroupRoster> roster_;
  std::optional<ibdt::SignPrecomputation> sign_pre_;
  std::optional<ibdt::CombPrecomputation> comb_pre_;
  std::vector<std::string> pay_codes_;
};

struct GroupSession {
  bool feasible = false;
  GroupRoster roster;
  Digest salt{};
  std::size_t sign_precomputations = 0;
  std::size_t comb_precomputations = 0;
};

/// members[0] becomes master. Throws DomainError on an empty or oversized
/// group or members registered with different providers.
GroupSession group_setup(const std::vector<UserApp*>& members, Rng& rng);

/// The master's side of index agreement over exchanged position digests.
std::optional<std::size_t> agree_on_digests(const std::vector<std::vector<Digest>>& digests,
                                            const keymgmt::KeyParams& params);

class VerifyingDevice {
 public:
  using PenaltyHook = std::function<void(const AccreditationResult&)>;

  VerifyingDevice(std::string verifier_id, PublicSystemInfo info, Rng rng);

  Ticket issue_ticket(std::int64_t now, std::string service_terms = {});
  /// Never throws on malformed input; returns a Rejected verdict instead.
  AccreditationResult accredit(const AccreditationMessage& msg, ByteView sigma, std::int64_t now);
  /// Decodes a Msg' = (Msg, sigma) payload first.
  AccreditationResult accredit(ByteView msg_prime, std::int64_t now);

  /// Forwards pay-code ciphertexts of a granted session to the SP.
  payment::Settlement forward_payments(ServiceProvider& sp, const TicketId& ticket,
                                       const std::vector<payment::PaymentCiphertext>& ciphertexts);

  void set_penalty_hook(PenaltyHook hook) { penalty_hook_ = std::move(hook); }
  const std::vector<AccreditationResult>& penalty_log() const { return penalty_log_; }
  const std::string& id() const { return id_; }
  bool ticket_outstanding(const TicketId& t) const { return issued_.count(t) != 0; }

 private:
  AccreditationResult reject(const TicketId& t, std::string reason) const;

  std::string id_;
  PublicSystemInfo info_;
  Rng rng_;
  std::map<TicketId, Ticket> issued_;
  std::set<TicketId> used_;
  std::map<TicketId, Amount> granted_;
  PenaltyHook penalty_hook_;
  std::vector<AccreditationResult> penalty_log_;
};

Bytes encode_msg_prime(const AccreditationMessage& msg, const ibdt::CombinedSignature& sigma);
std::pair<AccreditationMessage, Bytes> decode_msg_prime(ByteView bytes);

struct AccreditOptions {
  /// Members (by index, never the master) who withhold their share; the
  /// rest of the group still claims the full size.
  std::set<std::size_t> withheld;
};

/// Members sign, the master combines, the verifier decides.
AccreditationResult accredit(const std::vector<UserApp*>& members, VerifyingDevice& verifier, const Ticket& ticket,
                             std::int64_t now, const AccreditOptions& options = {});

enum class FrameType : std::uint8_t {
  Ticket = 0x01,
  PartialSignature = 0x02,
  MsgPrime = 0x03,
  Verdict = 0x04,
  PaymentCiphertext = 0x05,
  SettlementReceipt = 0x06,
  GroupHello = 0x10,
  PositionDigests = 0x11,
  IndexAnnounce = 0x12,
  PseudonymReveal = 0x13,
  Roster = 0x14,
};
std::string_view frame_name(FrameType t);

struct Frame {
  FrameType type;
  Bytes payload;

  Bytes encode() const;
  /// Throws ParseError on an empty buffer or an unknown type byte.
  static Frame decode(ByteView bytes);
};

Bytes encode_digests(const std::vector<Digest>& digests);
std::vector<Digest> decode_digests(ByteView bytes);
Bytes encode_payment(const TicketId& ticket, const payment::PaymentCiphertext& c);
std::pair<TicketId, payment::PaymentCiphertext> decode_payment(ByteView bytes);

}  // namespace gsa::protocol
