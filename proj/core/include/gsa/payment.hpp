#pragma once

// Prepaid scratch-card payments: SP-side ledger, pay codes encrypted to
// the SP key, and all-or-nothing settlement across the paying subset.

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gsa/bytes.hpp"
#include "gsa/crypto.hpp"

namespace gsa::payment {

using Amount = std::int64_t;  // integer minor units
using TicketId = std::array<std::uint8_t, 16>;

inline constexpr std::size_t kCodeBytes = 16;

/// RFC 4648 base32 (upper case, no padding).
std::string base32(ByteView data);
/// Hex-like rendering over 'a'..'p' so the output has no digits.
std::string letters(ByteView data);
/// Ledger key of a pay code; letters only.
std::string code_digest(std::string_view code);

struct ScratchCard {
  std::string code;
  Amount denomination = 0;
};

struct SpKeyPair {
  std::array<std::uint8_t, 32> public_key{};
  std::array<std::uint8_t, 32> secret_key{};

  static SpKeyPair generate(Rng& rng);
};
using SpPublicKey = std::array<std::uint8_t, 32>;

/// eph_pk (32) || nonce (24) || box(version, ticket id, code).
struct PaymentCiphertext {
  Bytes bytes;
  bool operator==(const PaymentCiphertext&) const = default;
};

struct PayCodePlaintext {
  TicketId ticket{};
  std::string code;
  bool operator==(const PayCodePlaintext&) const = default;
};

PaymentCiphertext encrypt_paycode(const SpPublicKey& pk, const TicketId& ticket, std::string_view code, Rng& rng);
/// nullopt when the authentication tag or the inner encoding does not check.
std::optional<PayCodePlaintext> decrypt_paycode(const SpKeyPair& keys, const PaymentCiphertext& c);

enum class SettlementStatus { Settled, Declined };
enum class DeclineReason { None, UnknownCode, Insufficient, SessionMismatch, Undecryptable };
std::string_view reason_name(DeclineReason r);

struct Share {
  std::string code_digest;
  Amount amount = 0;
  bool operator==(const Share&) const = default;
};

struct Settlement {
  TicketId ticket{};
  Amount total = 0;
  std::vector<Share> shares;
  SettlementStatus status = SettlementStatus::Declined;
  DeclineReason reason = DeclineReason::None;

  bool settled() const { return status == SettlementStatus::Settled; }
  /// Line-oriented receipt; carries only digests, amounts and the ticket.
  std::string to_text() const;
  Bytes encode() const;
  static Settlement decode(ByteView bytes);
};

/// Split `total` into `parts` shares: floor(total/parts) each, plus one unit
/// for the first total mod parts.
std::vector<Amount> split_amount(Amount total, std::size_t parts);

struct RedemptionEntry {
  TicketId ticket{};
  std::string code_digest;
  Amount amount = 0;
  bool operator==(const RedemptionEntry&) const = default;
};

struct LedgerSnapshot {
  std::map<std::string, Amount> balances;
  std::vector<RedemptionEntry> log;
  std::set<TicketId> consumed_tickets;
  Amount issued = 0;
  Amount settled = 0;

  bool operator==(const LedgerSnapshot&) const = default;
  std::string to_text() const;
};

/// Code-digest to balance store. Settlements are serialized by an internal
/// lock; issuance may come from any thread.
class CardLedger {
 public:
  /// Throws DomainError unless denomination > 0.
  ScratchCard issue_card(Amount denomination, Rng& rng);
  std::optional<Amount> balance(std::string_view code) const;

  /// Decrypts every ciphertext and debits the split of `amount` from the
  /// codes in arrival order, or changes nothing and reports why.
  /// Throws ContractViolation on an empty ciphertext list or a negative amount.
  Settlement settle(const SpKeyPair& keys, const TicketId& ticket, Amount amount,
                    const std::vector<PaymentCiphertext>& ciphertexts);

  bool ticket_consumed(const TicketId& ticket) const;
  Amount total_balance() const;
  Amount total_issued() const;
  Amount total_settled() const;
  LedgerSnapshot snapshot() const;

 private:
  mutable std::mutex mu_;
  LedgerSnapshot state_;
};

}  // namespace gsa::payment
