#include <doctest.h>

#include <random>
#include <set>

#include "gsa/errors.hpp"
#include "gsa/payment.hpp"

using namespace gsa;
using namespace gsa::payment;

namespace {

TicketId ticket_from(std::uint8_t fill) {
  TicketId t{};
  t.fill(fill);
  return t;
}

struct Fixture {
  Rng rng{99};
  SpKeyPair sp = SpKeyPair::generate(rng);
  CardLedger ledger;

  std::vector<PaymentCiphertext> pay(const TicketId& t, const std::vector<ScratchCard>& cards) {
    std::vector<PaymentCiphertext> out;
    for (const auto& c : cards) out.push_back(encrypt_paycode(sp.public_key, t, c.code, rng));
    return out;
  }
};

}  // namespace

TEST_CASE("base32 follows RFC 4648 without padding") {
  auto b = [](std::string_view s) { return base32(as_bytes(s)); };
  CHECK(b("") == "");
  CHECK(b("f") == "MY");
  CHECK(b("fo") == "MZXQ");
  CHECK(b("foo") == "MZXW6");
  CHECK(b("foob") == "MZXW6YQ");
  CHECK(b("fooba") == "MZXW6YTB");
  CHECK(b("foobar") == "MZXW6YTBOI");
  CHECK(letters(Bytes{0x00, 0x1f, 0xff}) == "aabppp");
}

TEST_CASE("issuing cards") {
  Fixture f;
  auto card = f.ledger.issue_card(1000, f.rng);
  CHECK(card.code.size() == 26);
  CHECK(card.code.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZ234567") == std::string::npos);
  CHECK(f.ledger.balance(card.code) == 1000);
  CHECK_FALSE(f.ledger.balance("AAAA").has_value());
  CHECK(f.ledger.issue_card(1000, f.rng).code != card.code);
  CHECK_THROWS_AS(f.ledger.issue_card(0, f.rng), DomainError);
  CHECK_THROWS_AS(f.ledger.issue_card(-5, f.rng), DomainError);
}

TEST_CASE("ten thousand codes have distinct digests") {
  Fixture f;
  std::set<std::string> codes, digests;
  for (int i = 0; i < 10'000; ++i) {
    auto c = f.ledger.issue_card(1, f.rng);
    codes.insert(c.code);
    auto d = code_digest(c.code);
    CHECK(d.find_first_not_of("abcdefghijklmnop") == std::string::npos);
    digests.insert(d);
  }
  CHECK(codes.size() == 10'000);
  CHECK(digests.size() == 10'000);
  CHECK(f.ledger.snapshot().balances.size() == 10'000);
}

TEST_CASE("pay code encryption") {
  Fixture f;
  const auto t = ticket_from(7);
  auto c1 = encrypt_paycode(f.sp.public_key, t, "MZXW6YTBOI", f.rng);
  auto c2 = encrypt_paycode(f.sp.public_key, t, "MZXW6YTBOI", f.rng);
  CHECK(c1 != c2);
  auto p = decrypt_paycode(f.sp, c1);
  REQUIRE(p);
  CHECK(p->ticket == t);
  CHECK(p->code == "MZXW6YTBOI");
  CHECK(decrypt_paycode(f.sp, c2) == p);

  auto other = SpKeyPair::generate(f.rng);
  CHECK_FALSE(decrypt_paycode(other, c1).has_value());

  for (std::size_t i = 0; i < c1.bytes.size(); i += 7) {
    auto bad = c1;
    bad.bytes[i] ^= 0x01;
    CHECK_FALSE(decrypt_paycode(f.sp, bad).has_value());
  }
  CHECK_FALSE(decrypt_paycode(f.sp, PaymentCiphertext{Bytes(10)}).has_value());
  CHECK_FALSE(decrypt_paycode(f.sp, PaymentCiphertext{}).has_value());
}

TEST_CASE("amount splitting") {
  CHECK(split_amount(9000, 3) == std::vector<Amount>{3000, 3000, 3000});
  CHECK(split_amount(10000, 3) == std::vector<Amount>{3334, 3333, 3333});
  CHECK(split_amount(5, 4) == std::vector<Amount>{2, 1, 1, 1});
  CHECK(split_amount(0, 2) == std::vector<Amount>{0, 0});
  std::mt19937_64 gen(3);
  for (int i = 0; i < 1000; ++i) {
    const Amount total = static_cast<Amount>(gen() % 1'000'000);
    const std::size_t parts = 1 + gen() % 12;
    auto s = split_amount(total, parts);
    Amount sum = 0;
    for (auto a : s) sum += a;
    CHECK(sum == total);
    CHECK(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) <= 1);
  }
  CHECK_THROWS_AS(split_amount(10, 0), ContractViolation);
}

TEST_CASE("settlement examples") {
  Fixture f;
  const auto t = ticket_from(1);

  SUBCASE("exact division") {
    std::vector<ScratchCard> cards;
    for (int i = 0; i < 3; ++i) cards.push_back(f.ledger.issue_card(5000, f.rng));
    auto s = f.ledger.settle(f.sp, t, 9000, f.pay(t, cards));
    REQUIRE(s.settled());
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(s.shares[i].amount == 3000);
      CHECK(s.shares[i].code_digest == code_digest(cards[i].code));
      CHECK(f.ledger.balance(cards[i].code) == 2000);
    }
    CHECK(f.ledger.ticket_consumed(t));
    CHECK(f.ledger.total_settled() == 9000);
  }
  SUBCASE("remainder goes to the first payers") {
    std::vector<ScratchCard> cards;
    for (int i = 0; i < 3; ++i) cards.push_back(f.ledger.issue_card(5000, f.rng));
    auto s = f.ledger.settle(f.sp, t, 10000, f.pay(t, cards));
    REQUIRE(s.settled());
    CHECK(s.shares[0].amount == 3334);
    CHECK(s.shares[1].amount == 3333);
    CHECK(s.shares[2].amount == 3333);
    CHECK(s.shares[0].amount + s.shares[1].amount + s.shares[2].amount == 10000);
  }
  SUBCASE("insufficient balance declines without debits") {
    std::vector<ScratchCard> cards{f.ledger.issue_card(5000, f.rng), f.ledger.issue_card(100, f.rng)};
    const auto before = f.ledger.snapshot();
    auto s = f.ledger.settle(f.sp, t, 1000, f.pay(t, cards));
    CHECK(s.status == SettlementStatus::Declined);
    CHECK(s.reason == DeclineReason::Insufficient);
    CHECK(s.shares.empty());
    CHECK(f.ledger.snapshot() == before);
    CHECK(f.ledger.snapshot().to_text() == before.to_text());
    CHECK_FALSE(f.ledger.ticket_consumed(t));
  }
  SUBCASE("unknown code") {
    std::vector<ScratchCard> cards{f.ledger.issue_card(5000, f.rng), ScratchCard{"NOTACODE", 1}};
    const auto before = f.ledger.snapshot();
    auto s = f.ledger.settle(f.sp, t, 1000, f.pay(t, cards));
    CHECK(s.reason == DeclineReason::UnknownCode);
    CHECK(f.ledger.snapshot() == before);
  }
  SUBCASE("ciphertext bound to another ticket") {
    auto card = f.ledger.issue_card(5000, f.rng);
    const auto before = f.ledger.snapshot();
    auto s = f.ledger.settle(f.sp, t, 1000, f.pay(ticket_from(2), {card}));
    CHECK(s.reason == DeclineReason::SessionMismatch);
    CHECK(f.ledger.snapshot() == before);
  }
  SUBCASE("tampered ciphertext") {
    auto card = f.ledger.issue_card(5000, f.rng);
    auto cts = f.pay(t, {card});
    cts[0].bytes.back() ^= 0x80;
    CHECK(f.ledger.settle(f.sp, t, 1000, cts).reason == DeclineReason::Undecryptable);
  }
  SUBCASE("the same code twice must cover both shares") {
    auto card = f.ledger.issue_card(900, f.rng);
    auto s = f.ledger.settle(f.sp, t, 1000, f.pay(t, {card, card}));
    CHECK(s.reason == DeclineReason::Insufficient);
    s = f.ledger.settle(f.sp, t, 900, f.pay(t, {card, card}));
    CHECK(s.settled());
    CHECK(f.ledger.balance(card.code) == 0);
  }
  SUBCASE("replay after settlement") {
    std::vector<ScratchCard> cards{f.ledger.issue_card(5000, f.rng)};
    auto cts = f.pay(t, cards);
    REQUIRE(f.ledger.settle(f.sp, t, 1000, cts).settled());
    const auto before = f.ledger.snapshot();
    auto again = f.ledger.settle(f.sp, t, 1000, cts);
    CHECK(again.reason == DeclineReason::SessionMismatch);
    CHECK(f.ledger.snapshot() == before);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(f.ledger.settle(f.sp, t, 1000, {}), ContractViolation);
    auto card = f.ledger.issue_card(5000, f.rng);
    CHECK_THROWS_AS(f.ledger.settle(f.sp, t, -1, f.pay(t, {card})), ContractViolation);
  }
}

TEST_CASE("settlement receipts carry no pay codes") {
  Fixture f;
  const auto t = ticket_from(3);
  std::vector<ScratchCard> cards{f.ledger.issue_card(5000, f.rng), f.ledger.issue_card(5000, f.rng)};
  auto s = f.ledger.settle(f.sp, t, 3001, f.pay(t, cards));
  REQUIRE(s.settled());
  const auto text = s.to_text();
  for (const auto& c : cards) CHECK(text.find(c.code) == std::string::npos);
  CHECK(text.find("total 3001") != std::string::npos);
  CHECK(text.find("status settled") != std::string::npos);
  CHECK(f.ledger.snapshot().to_text().find(cards[0].code) == std::string::npos);
}

TEST_CASE("randomized ledger operations conserve value") {
  Fixture f;
  std::mt19937_64 gen(4242);
  std::vector<ScratchCard> cards;
  Amount issued = 0, settled = 0;
  int declined = 0, accepted = 0;
  for (int op = 0; op < 1000; ++op) {
    if (cards.empty() || gen() % 3 == 0) {
      const Amount denom = 1 + static_cast<Amount>(gen() % 10'000);
      cards.push_back(f.ledger.issue_card(denom, f.rng));
      issued += denom;
    } else {
      TicketId t{};
      f.rng.fill(t);
      const std::size_t payers = 1 + gen() % std::min<std::size_t>(cards.size(), 5);
      std::vector<ScratchCard> chosen;
      for (std::size_t i = 0; i < payers; ++i) chosen.push_back(cards[gen() % cards.size()]);
      const Amount amount = static_cast<Amount>(gen() % 12'000);
      auto cts = f.pay(t, chosen);
      if (gen() % 10 == 0) cts[0] = encrypt_paycode(f.sp.public_key, TicketId{}, chosen[0].code, f.rng);
      const auto before = f.ledger.snapshot();
      auto s = f.ledger.settle(f.sp, t, amount, cts);
      if (s.settled()) {
        ++accepted;
        settled += amount;
        Amount sum = 0;
        for (const auto& sh : s.shares) sum += sh.amount;
        CHECK(sum == amount);
      } else {
        ++declined;
        CHECK(f.ledger.snapshot() == before);
      }
    }
    const auto snap = f.ledger.snapshot();
    Amount balances = 0;
    for (const auto& [_, b] : snap.balances) {
      CHECK(b >= 0);
      balances += b;
    }
    REQUIRE(balances + settled == issued);
    CHECK(snap.issued == issued);
    CHECK(snap.settled == settled);
  }
  CHECK(accepted > 50);
  CHECK(declined > 50);
}
