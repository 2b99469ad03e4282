#include "gsa/payment.hpp"

#include <sstream>

#include <sodium.h>

#include "gsa/errors.hpp"

namespace gsa::payment {

namespace {

constexpr std::uint16_t kPlaintextVersion = 1;

void ensure_sodium_ready() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw Error("libsodium initialisation failed");
}

}  // namespace

std::string base32(ByteView data) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
  std::string out;
  std::uint32_t buffer = 0;
  int bits = 0;
  for (auto b : data) {
    buffer = (buffer << 8) | b;
    bits += 8;
    while (bits >= 5) {
      out.push_back(kAlphabet[(buffer >> (bits - 5)) & 31]);
      bits -= 5;
    }
  }
  if (bits > 0) out.push_back(kAlphabet[(buffer << (5 - bits)) & 31]);
  return out;
}

std::string letters(ByteView data) {
  std::string out;
  out.reserve(2 * data.size());
  for (auto b : data) {
    out.push_back(static_cast<char>('a' + (b >> 4)));
    out.push_back(static_cast<char>('a' + (b & 15)));
  }
  return out;
}

std::string code_digest(std::string_view code) {
  const auto d = sha256("gsa.payment.code", {as_bytes(code)});
  return letters(ByteView(d.data(), 16));
}

SpKeyPair SpKeyPair::generate(Rng& rng) {
  ensure_sodium_ready();
  std::array<std::uint8_t, crypto_box_SEEDBYTES> seed{};
  rng.fill(seed);
  SpKeyPair kp;
  crypto_box_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  sodium_memzero(seed.data(), seed.size());
  return kp;
}

PaymentCiphertext encrypt_paycode(const SpPublicKey& pk, const TicketId& ticket, std::string_view code, Rng& rng) {
  ensure_sodium_ready();
  Writer w;
  w.u16(kPlaintextVersion).field(ByteView(ticket)).field(code);
  const Bytes plain = std::move(w).take();

  std::array<std::uint8_t, crypto_box_SEEDBYTES> seed{};
  rng.fill(seed);
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> eph_pk{};
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> eph_sk{};
  crypto_box_seed_keypair(eph_pk.data(), eph_sk.data(), seed.data());
  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
  rng.fill(nonce);

  PaymentCiphertext out;
  out.bytes.resize(eph_pk.size() + nonce.size() + crypto_box_MACBYTES + plain.size());
  std::copy(eph_pk.begin(), eph_pk.end(), out.bytes.begin());
  std::copy(nonce.begin(), nonce.end(), out.bytes.begin() + eph_pk.size());
  if (crypto_box_easy(out.bytes.data() + eph_pk.size() + nonce.size(), plain.data(), plain.size(), nonce.data(),
                      pk.data(), eph_sk.data()) != 0)
    throw Error("pay code encryption failed");
  sodium_memzero(eph_sk.data(), eph_sk.size());
  sodium_memzero(seed.data(), seed.size());
  return out;
}

std::optional<PayCodePlaintext> decrypt_paycode(const SpKeyPair& keys, const PaymentCiphertext& c) {
  ensure_sodium_ready();
  constexpr std::size_t header = crypto_box_PUBLICKEYBYTES + crypto_box_NONCEBYTES;
  if (c.bytes.size() < header + crypto_box_MACBYTES) return std::nullopt;
  const std::uint8_t* eph_pk = c.bytes.data();
  const std::uint8_t* nonce = eph_pk + crypto_box_PUBLICKEYBYTES;
  const std::size_t box_len = c.bytes.size() - header;
  Bytes plain(box_len - crypto_box_MACBYTES);
  if (crypto_box_open_easy(plain.data(), c.bytes.data() + header, box_len, nonce, eph_pk, keys.secret_key.data()) != 0)
    return std::nullopt;
  try {
    Reader r(plain);
    r.expect_version(kPlaintextVersion);
    PayCodePlaintext out;
    const auto t = r.field();
    if (t.size() != out.ticket.size()) return std::nullopt;
    std::copy(t.begin(), t.end(), out.ticket.begin());
    out.code = r.field_string();
    r.expect_end();
    return out;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

std::string_view reason_name(DeclineReason r) {
  switch (r) {
    case DeclineReason::None: return "none";
    case DeclineReason::UnknownCode: return "unknown-code";
    case DeclineReason::Insufficient: return "insufficient";
    case DeclineReason::SessionMismatch: return "session-mismatch";
    case DeclineReason::Undecryptable: return "undecryptable";
  }
  return "unknown";
}

std::string Settlement::to_text() const {
  std::ostringstream os;
  os << "settlement v1\n";
  os << "ticket " << letters(ticket) << "\n";
  os << "total " << total << "\n";
  os << "status " << (settled() ? "settled" : "declined") << "\n";
  if (!settled()) os << "reason " << reason_name(reason) << "\n";
  for (const auto& s : shares) os << "share " << s.code_digest << " " << s.amount << "\n";
  return os.str();
}

Bytes Settlement::encode() const {
  std::vector<Bytes> items;
  for (const auto& s : shares) items.push_back(Writer().field(s.code_digest).field_i64(s.amount).bytes());
  Writer w;
  w.u16(kPlaintextVersion)
      .field(ByteView(ticket))
      .field_i64(total)
      .field_u8(static_cast<std::uint8_t>(status))
      .field_u8(static_cast<std::uint8_t>(reason))
      .field_list(items);
  return std::move(w).take();
}

Settlement Settlement::decode(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kPlaintextVersion);
  Settlement out;
  const auto t = r.field();
  if (t.size() != out.ticket.size()) throw ParseError("settlement ticket id must be 16 bytes");
  std::copy(t.begin(), t.end(), out.ticket.begin());
  out.total = r.field_i64();
  const auto status = r.field_u8();
  const auto reason = r.field_u8();
  if (status > 1 || reason > static_cast<std::uint8_t>(DeclineReason::Undecryptable))
    throw ParseError("settlement status out of range");
  out.status = static_cast<SettlementStatus>(status);
  out.reason = static_cast<DeclineReason>(reason);
  for (const auto& item : r.field_list()) {
    Reader ir(item);
    Share s;
    s.code_digest = ir.field_string();
    s.amount = ir.field_i64();
    ir.expect_end();
    out.shares.push_back(std::move(s));
  }
  r.expect_end();
  return out;
}

std::vector<Amount> split_amount(Amount total, std::size_t parts) {
  if (parts == 0) throw ContractViolation("cannot split an amount over zero payers");
  if (total < 0) throw ContractViolation("negative amount");
  const auto n = static_cast<Amount>(parts);
  std::vector<Amount> out(parts, total / n);
  for (Amount i = 0; i < total % n; ++i) ++out[static_cast<std::size_t>(i)];
  return out;
}

std::string LedgerSnapshot::to_text() const {
  std::ostringstream os;
  os << "ledger v1\n";
  os << "issued " << issued << "\n";
  os << "settled " << settled << "\n";
  for (const auto& [digest, amount] : balances) os << "balance " << digest << " " << amount << "\n";
  for (const auto& t : consumed_tickets) os << "consumed " << letters(t) << "\n";
  for (const auto& e : log) os << "debit " << letters(e.ticket) << " " << e.code_digest << " " << e.amount << "\n";
  return os.str();
}

ScratchCard CardLedger::issue_card(Amount denomination, Rng& rng) {
  if (denomination <= 0) throw DomainError("card denomination must be positive");
  std::lock_guard lock(mu_);
  for (;;) {
    std::array<std::uint8_t, kCodeBytes> raw{};
    rng.fill(raw);
    ScratchCard card{base32(raw), denomination};
    if (state_.balances.emplace(code_digest(card.code), denomination).second) {
      state_.issued += denomination;
      return card;
    }
  }
}

std::optional<Amount> CardLedger::balance(std::string_view code) const {
  std::lock_guard lock(mu_);
  auto it = state_.balances.find(code_digest(code));
  if (it == state_.balances.end()) return std::nullopt;
  return it->second;
}

Settlement CardLedger::settle(const SpKeyPair& keys, const TicketId& ticket, Amount amount,
                              const std::vector<PaymentCiphertext>& ciphertexts) {
  if (ciphertexts.empty()) throw ContractViolation("settlement needs at least one payment");
  const auto split = split_amount(amount, ciphertexts.size());

  Settlement out;
  out.ticket = ticket;
  out.total = amount;
  auto decline = [&](DeclineReason r) {
    out.status = SettlementStatus::Declined;
    out.reason = r;
    out.shares.clear();
    return out;
  };

  std::lock_guard lock(mu_);
  if (state_.consumed_tickets.count(ticket)) return decline(DeclineReason::SessionMismatch);

  std::map<std::string, Amount> needed;
  for (std::size_t i = 0; i < ciphertexts.size(); ++i) {
    auto plain = decrypt_paycode(keys, ciphertexts[i]);
    if (!plain) return decline(DeclineReason::Undecryptable);
    if (plain->ticket != ticket) return decline(DeclineReason::SessionMismatch);
    auto digest = code_digest(plain->code);
    if (!state_.balances.count(digest)) return decline(DeclineReason::UnknownCode);
    needed[digest] += split[i];
    out.shares.push_back({std::move(digest), split[i]});
  }
  for (const auto& [digest, want] : needed)
    if (state_.balances.at(digest) < want) return decline(DeclineReason::Insufficient);

  for (const auto& s : out.shares) {
    state_.balances.at(s.code_digest) -= s.amount;
    state_.log.push_back({ticket, s.code_digest, s.amount});
  }
  state_.settled += amount;
  state_.consumed_tickets.insert(ticket);
  out.status = SettlementStatus::Settled;
  return out;
}

bool CardLedger::ticket_consumed(const TicketId& ticket) const {
  std::lock_guard lock(mu_);
  return state_.consumed_tickets.count(ticket) != 0;
}

Amount CardLedger::total_balance() const {
  std::lock_guard lock(mu_);
  Amount sum = 0;
  for (const auto& [_, b] : state_.balances) sum += b;
  return sum;
}

Amount CardLedger::total_issued() const {
  std::lock_guard lock(mu_);
  return state_.issued;
}

Amount CardLedger::total_settled() const {
  std::lock_guard lock(mu_);
  return state_.settled;
}

LedgerSnapshot CardLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return state_;
}

}  // namespace gsa::payment
