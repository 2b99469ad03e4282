#include <doctest.h>

#include <algorithm>
#include <memory>
#include <random>

#include "gsa/errors.hpp"
#include "gsa/protocol.hpp"

using namespace gsa;
using namespace gsa::protocol;
using keymgmt::UserIdentifier;

namespace {

SystemConfig default_config(std::uint64_t seed = 1) {
  SystemConfig c;
  c.key_params = {4, 1};
  c.n_max = 10;
  c.price_table = SystemConfig::linear_prices(10, 1000);
  c.seed = seed;
  return c;
}

struct World {
  ServiceProvider sp;
  VerifyingDevice verifier;
  std::vector<std::unique_ptr<UserApp>> users;
  Rng rng;

  explicit World(SystemConfig config = default_config())
      : sp(ServiceProvider::system_setup(config)),
        verifier("gate-1", sp.info(), Rng(config.seed).fork("verifier")),
        rng(Rng(config.seed).fork("world")) {}

  UserApp* enrol(const std::string& digits) {
    auto id = UserIdentifier::parse(digits);
    auto pin = sp.issue_pin(id);
    users.push_back(std::make_unique<UserApp>(id, sp.register_user(pin, id), rng.fork(digits + "#" + std::to_string(users.size()))));
    return users.back().get();
  }

  std::vector<UserApp*> enrol_all(const std::vector<std::string>& ids) {
    std::vector<UserApp*> out;
    for (const auto& s : ids) out.push_back(enrol(s));
    return out;
  }
};

std::string random_digits(std::mt19937_64& gen, std::size_t n) {
  std::string s(n, '0');
  for (auto& c : s) c = static_cast<char>('0' + gen() % 10);
  return s;
}

// Random 8-digit identifiers, redrawn until the group can agree on an index.
std::vector<std::string> feasible_group(std::mt19937_64& gen, std::size_t t) {
  for (;;) {
    std::vector<std::string> ids;
    std::vector<keymgmt::KeyVector> kvs;
    for (std::size_t i = 0; i < t; ++i) {
      ids.push_back(random_digits(gen, 8));
      kvs.push_back(keymgmt::derive_key_vector(UserIdentifier::parse(ids.back()), 4, 1));
    }
    if (keymgmt::agree_index(kvs)) return ids;
  }
}

bool contains(const Bytes& hay, ByteView needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

TEST_CASE("system setup") {
  auto sp = ServiceProvider::system_setup(default_config());
  CHECK(sp.info().pms.n_max == 10);
  CHECK(sp.info().price(4) == 4000);
  CHECK_THROWS_AS(sp.info().price(11), PolicyError);

  auto other = ServiceProvider::system_setup(default_config(2));
  CHECK(other.info().mpk.serialize() != sp.info().mpk.serialize());
  CHECK(other.info().sp_key != sp.info().sp_key);
  auto again = ServiceProvider::system_setup(default_config());
  CHECK(again.info().mpk.serialize() == sp.info().mpk.serialize());

  auto missing = default_config();
  missing.price_table.erase(3);
  CHECK_THROWS_AS(ServiceProvider::system_setup(missing), ConfigurationError);
  auto negative = default_config();
  negative.price_table[2] = -1;
  CHECK_THROWS_AS(ServiceProvider::system_setup(negative), ConfigurationError);
  auto bad_d = default_config();
  bad_d.key_params.digits = 0;
  CHECK_THROWS_AS(ServiceProvider::system_setup(bad_d), ConfigurationError);
  auto bad_n = default_config();
  bad_n.n_max = 0;
  CHECK_THROWS_AS(ServiceProvider::system_setup(bad_n), ConfigurationError);
}

TEST_CASE("registration") {
  World w;
  auto id = UserIdentifier::parse("12345678");
  auto pin = w.sp.issue_pin(id);
  auto bundle = w.sp.register_user(pin, id);
  CHECK(bundle.key_vector.entries == std::vector<std::string>{"18", "27", "36", "45"});
  REQUIRE(bundle.secret_keys.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(bundle.secret_keys[i].identity == bundle.key_vector.entries[i]);
    CHECK(ibdt::key_is_consistent(bundle.info.pms, bundle.info.mpk, bundle.secret_keys[i]));
  }
  CHECK_THROWS_AS(w.sp.register_user(pin, id), ReplayError);
  CHECK_THROWS_AS(w.sp.register_user("NOSUCHPIN", id), AuthError);

  auto pin2 = w.sp.issue_pin(UserIdentifier::parse("87654321"));
  CHECK_THROWS_AS(w.sp.register_user(pin2, id), AuthError);
  CHECK_FALSE(w.sp.registry().at(pin2).issued);

  CHECK_THROWS_AS(w.sp.issue_pin(UserIdentifier::parse("123")), DomainError);

  // Only a salted digest of the identifier is kept.
  for (const auto& [p, record] : w.sp.registry()) {
    CHECK_FALSE(contains(Bytes(record.identifier_digest.begin(), record.identifier_digest.end()), as_bytes("12345678")));
    CHECK(record.pin == p);
  }
}

TEST_CASE("user application checks its keys") {
  World w;
  auto id = UserIdentifier::parse("12345678");
  auto bundle = w.sp.register_user(w.sp.issue_pin(id), id);

  CHECK_NOTHROW(UserApp(id, bundle, Rng(1)));
  auto swapped = bundle;
  std::swap(swapped.secret_keys[0].key, swapped.secret_keys[1].key);
  CHECK_THROWS_AS(UserApp(id, swapped, Rng(1)), AuthError);
  auto short_bundle = bundle;
  short_bundle.secret_keys.pop_back();
  CHECK_THROWS_AS(UserApp(id, short_bundle, Rng(1)), AuthError);
  CHECK_THROWS_AS(UserApp(UserIdentifier::parse("12345670"), bundle, Rng(1)), AuthError);

  // Keys from a different provider do not pass against this one's mpk.
  World other(default_config(9));
  auto foreign = other.sp.register_user(other.sp.issue_pin(id), id);
  foreign.info = bundle.info;
  CHECK_THROWS_AS(UserApp(id, foreign, Rng(1)), AuthError);
}

TEST_CASE("group setup") {
  World w;
  SUBCASE("distinct last digits agree on the first position") {
    auto members = w.enrol_all({"11111111", "22222222", "33333333"});
    bg::OpCounters c;
    GroupSession s;
    c = bg::count_operations("group-setup", [&] { s = group_setup(members, w.rng); });
    REQUIRE(s.feasible);
    CHECK(s.roster.j == 1);
    CHECK(s.roster.pseudonyms == std::vector<std::string>{"11", "12", "13"});
    CHECK(s.sign_precomputations == 3);
    CHECK(s.comb_precomputations == 1);
    CHECK(members[0]->mode() == Mode::Master);
    CHECK(members[1]->mode() == Mode::Slave);
    // 3 sign precomputations plus one comb precomputation at n = 10, t = 3.
    const std::size_t n = 10, t = 3;
    CHECK(c.multiplications == 3 * n + (n - t));
    CHECK(c.exponentiations == 3 * (n + 2) + (n - t));
    CHECK(c.pairings == 0);
  }
  SUBCASE("first collision-free position") {
    auto members = w.enrol_all({"12345678", "12345618"});
    auto s = group_setup(members, w.rng);
    REQUIRE(s.feasible);
    CHECK(s.roster.j == 2);
    CHECK(s.roster.pseudonyms == std::vector<std::string>{"27", "21"});
  }
  SUBCASE("identical identifiers cannot form a group") {
    auto members = w.enrol_all({"12345678", "12345678"});
    auto s = group_setup(members, w.rng);
    CHECK_FALSE(s.feasible);
    CHECK(s.sign_precomputations == 0);
    CHECK_FALSE(members[0]->in_group());
  }
  SUBCASE("singleton") {
    auto members = w.enrol_all({"12345678"});
    auto s = group_setup(members, w.rng);
    REQUIRE(s.feasible);
    CHECK(s.roster.j == 1);
    CHECK(s.roster.pseudonyms.size() == 1);
  }
  SUBCASE("bounds") {
    CHECK_THROWS_AS(group_setup({}, w.rng), DomainError);
    std::vector<std::string> ids;
    for (int i = 0; i < 11; ++i) ids.push_back("1000000" + std::to_string(i % 10));
    CHECK_THROWS_AS(group_setup(w.enrol_all(ids), w.rng), DomainError);
  }
  SUBCASE("members of different providers") {
    World other(default_config(5));
    std::vector<UserApp*> mixed{w.enrol("11111111"), other.enrol("22222222")};
    CHECK_THROWS_AS(group_setup(mixed, w.rng), DomainError);
  }
}

TEST_CASE("tickets") {
  World w;
  auto a = w.verifier.issue_ticket(100);
  auto b = w.verifier.issue_ticket(100);
  CHECK(a.ticket_id != b.ticket_id);
  CHECK(a.ticket_id.size() == 16);
  CHECK(a.verifier_id == "gate-1");
  CHECK(a.issued_at == 100);
  CHECK(a.validity_window == 60);
  CHECK(Ticket::decode(a.encode()) == a);
  CHECK(w.verifier.ticket_outstanding(a.ticket_id));
}

TEST_CASE("canonical message encoding") {
  AccreditationMessage msg;
  msg.ticket.verifier_id = "gate-1";
  msg.ticket.validity_window = 60;
  msg.pseudonyms = {"18", "27"};
  const auto golden =
      "00010000003c0001000000100000000000000000000000000000000000000006676174652d3100000008000000000000000000000008000000"
      "000000003c000000000000001000000002000000023138000000023237";
  CHECK(to_hex(canonical_encode(msg)) == golden);
  CHECK(canonical_decode(from_hex(golden)) == msg);

  auto swapped = msg;
  std::swap(swapped.pseudonyms[0], swapped.pseudonyms[1]);
  CHECK(canonical_encode(swapped) != canonical_encode(msg));

  auto bytes = canonical_encode(msg);
  CHECK_THROWS_AS(canonical_decode(ByteView(bytes.data(), bytes.size() - 1)), ParseError);
  bytes.push_back(0);
  CHECK_THROWS_AS(canonical_decode(bytes), ParseError);
  CHECK_THROWS_AS(canonical_decode(Bytes{0, 2}), ParseError);
}

TEST_CASE("accreditation verdicts") {
  World w;
  auto members = w.enrol_all({"11111111", "22222222", "33333333", "44444444"});
  REQUIRE(group_setup(members, w.rng).feasible);
  std::vector<AccreditationResult> hooked;
  w.verifier.set_penalty_hook([&](const AccreditationResult& r) { hooked.push_back(r); });

  SUBCASE("honest group") {
    auto ticket = w.verifier.issue_ticket(0);
    auto r = accredit(members, w.verifier, ticket, 5);
    CHECK(r.verdict == Verdict::Granted);
    CHECK(r.group_size == 4);
    CHECK(r.amount_due == w.sp.info().price(4));
    CHECK_FALSE(w.verifier.ticket_outstanding(ticket.ticket_id));
    CHECK(hooked.empty());
  }
  SUBCASE("a member withholds") {
    auto ticket = w.verifier.issue_ticket(0);
    auto r = accredit(members, w.verifier, ticket, 5, AccreditOptions{{2}});
    CHECK(r.verdict == Verdict::Penalized);
    CHECK(r.amount_due == 0);
    CHECK(r.reason == "pairing-check-failed");
    REQUIRE(hooked.size() == 1);
    CHECK(w.verifier.penalty_log().size() == 1);
    CHECK_THROWS_AS(accredit(members, w.verifier, w.verifier.issue_ticket(0), 5, AccreditOptions{{0}}),
                    ContractViolation);
  }
  SUBCASE("replaying an earlier Msg'") {
    auto ticket = w.verifier.issue_ticket(0);
    AccreditationMessage msg{ticket, members[0]->roster().pseudonyms};
    std::vector<ibdt::PartialSignature> partials;
    for (auto* m : members) partials.push_back(m->sign_ticket(msg));
    const auto frame = encode_msg_prime(msg, members[0]->combine(msg, partials));
    CHECK(w.verifier.accredit(frame, 5).verdict == Verdict::Granted);
    auto again = w.verifier.accredit(frame, 6);
    CHECK(again.verdict == Verdict::Rejected);
    CHECK(again.reason == "replay");
  }
  SUBCASE("expired ticket") {
    auto ticket = w.verifier.issue_ticket(0);
    auto r = accredit(members, w.verifier, ticket, 61);
    CHECK(r.verdict == Verdict::Rejected);
    CHECK(r.reason == "expired");
    CHECK(accredit(members, w.verifier, ticket, 60).verdict == Verdict::Granted);
  }
  SUBCASE("clock before issuance") {
    auto ticket = w.verifier.issue_ticket(100);
    CHECK(accredit(members, w.verifier, ticket, 99).reason == "expired");
  }
  SUBCASE("ticket from another verifier") {
    VerifyingDevice other("gate-2", w.sp.info(), Rng(77));
    auto ticket = other.issue_ticket(0);
    auto r = accredit(members, w.verifier, ticket, 1);
    CHECK(r.verdict == Verdict::Rejected);
    CHECK(r.reason == "unknown-ticket");
  }
  SUBCASE("altered ticket terms") {
    auto ticket = w.verifier.issue_ticket(0, "lane A");
    ticket.service_terms = "lane B";
    CHECK(accredit(members, w.verifier, ticket, 1).reason == "ticket-mismatch");
  }
  SUBCASE("structural refusals") {
    auto ticket = w.verifier.issue_ticket(0);
    AccreditationMessage dup{ticket, {"11", "11"}};
    CHECK(w.verifier.accredit(dup, Bytes{}, 1).reason == "duplicate-pseudonyms");
    AccreditationMessage empty{ticket, {}};
    CHECK(w.verifier.accredit(empty, Bytes{}, 1).reason == "empty-group");
    AccreditationMessage junk{ticket, {"1a"}};
    CHECK(w.verifier.accredit(junk, Bytes{}, 1).reason == "malformed-pseudonym");
    std::vector<std::string> many;
    for (int i = 0; i < 11; ++i) many.push_back("1" + std::to_string(i));
    CHECK(w.verifier.accredit(AccreditationMessage{ticket, many}, Bytes{}, 1).reason == "group-too-large");
    CHECK(w.verifier.accredit(Bytes{1, 2, 3}, 1).reason == "malformed");
    // None of these consumed the ticket.
    CHECK(accredit(members, w.verifier, ticket, 2).verdict == Verdict::Granted);
  }
  SUBCASE("garbage signature is penalized") {
    auto ticket = w.verifier.issue_ticket(0);
    AccreditationMessage msg{ticket, members[0]->roster().pseudonyms};
    auto r = w.verifier.accredit(msg, Bytes(192, 0), 1);
    CHECK(r.verdict == Verdict::Penalized);
    CHECK(r.reason == "malformed-signature");
  }
  SUBCASE("signers refuse a message for another group") {
    auto ticket = w.verifier.issue_ticket(0);
    AccreditationMessage msg{ticket, {"11", "12", "13"}};
    CHECK_THROWS_AS(members[1]->sign_ticket(msg), PolicyError);
    CHECK_THROWS_AS(members[1]->combine(AccreditationMessage{ticket, members[0]->roster().pseudonyms}, {}),
                    ContractViolation);
  }
}

TEST_CASE("end-to-end correctness for every group size") {
  std::mt19937_64 gen(101);
  World w;
  for (std::size_t t = 1; t <= 10; ++t) {
    for (int draw = 0; draw < 5; ++draw) {
      auto members = w.enrol_all(feasible_group(gen, t));
      auto s = group_setup(members, w.rng);
      REQUIRE(s.feasible);
      auto ticket = w.verifier.issue_ticket(static_cast<std::int64_t>(t));
      auto r = accredit(members, w.verifier, ticket, static_cast<std::int64_t>(t) + 1);
      CAPTURE(t);
      CAPTURE(r.reason);
      CHECK(r.verdict == Verdict::Granted);
      CHECK(r.group_size == t);
      CHECK(r.amount_due == w.sp.info().price(t));
    }
  }
}

TEST_CASE("a group one short cannot claim the full size") {
  std::mt19937_64 gen(202);
  World w;
  for (std::size_t t = 2; t <= 10; ++t) {
    auto base = w.enrol_all(feasible_group(gen, t));
    for (std::size_t drop = 0; drop < t; ++drop) {
      // Whoever is dropped, someone else leads.
      std::vector<UserApp*> order = base;
      if (drop == 0) std::swap(order[0], order[1]);
      const std::size_t withheld = drop == 0 ? 1 : drop;
      REQUIRE(group_setup(order, w.rng).feasible);
      auto r = accredit(order, w.verifier, w.verifier.issue_ticket(0), 1, AccreditOptions{{withheld}});
      CAPTURE(t);
      CAPTURE(drop);
      CHECK(r.verdict == Verdict::Penalized);
    }
  }
}

TEST_CASE("any member may act as master") {
  World w;
  auto members = w.enrol_all({"11111111", "22222222", "33333333", "44444444", "55555555"});
  for (std::size_t lead = 0; lead < members.size(); ++lead) {
    auto order = members;
    std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lead), order.end());
    REQUIRE(group_setup(order, w.rng).feasible);
    CHECK(order[0]->mode() == Mode::Master);
    auto r = accredit(order, w.verifier, w.verifier.issue_ticket(0), 1);
    CHECK(r.verdict == Verdict::Granted);
    CHECK(r.group_size == 5);
  }
}

TEST_CASE("payments through the verifier") {
  World w;
  auto members = w.enrol_all({"11111111", "22222222", "33333333"});
  for (auto* m : members) m->load_card(w.sp.sell_card(5000).code);
  REQUIRE(group_setup(members, w.rng).feasible);
  auto ticket = w.verifier.issue_ticket(0);

  std::vector<payment::PaymentCiphertext> cts;
  for (auto* m : members) cts.push_back(*m->pay(ticket));
  // Not granted yet: the verifier does not forward.
  auto early = w.verifier.forward_payments(w.sp, ticket.ticket_id, cts);
  CHECK(early.reason == payment::DeclineReason::SessionMismatch);
  CHECK(w.sp.ledger().total_settled() == 0);

  REQUIRE(accredit(members, w.verifier, ticket, 1).granted());
  auto s = w.verifier.forward_payments(w.sp, ticket.ticket_id, cts);
  REQUIRE(s.settled());
  CHECK(s.total == 3000);
  for (auto* m : members) CHECK(w.sp.ledger().balance(m->pay_codes().front()) == 4000);
  CHECK(w.verifier.forward_payments(w.sp, ticket.ticket_id, cts).reason == payment::DeclineReason::SessionMismatch);

  auto* without_card = w.enrol("44444444");
  CHECK_FALSE(without_card->pay(ticket).has_value());
}

TEST_CASE("wire frames") {
  for (auto t : {FrameType::Ticket, FrameType::PartialSignature, FrameType::MsgPrime, FrameType::Verdict,
                 FrameType::PaymentCiphertext, FrameType::SettlementReceipt, FrameType::GroupHello,
                 FrameType::PositionDigests, FrameType::IndexAnnounce, FrameType::PseudonymReveal, FrameType::Roster}) {
    Frame f{t, Bytes{1, 2, 3}};
    auto bytes = f.encode();
    CHECK(bytes[0] == static_cast<std::uint8_t>(t));
    auto back = Frame::decode(bytes);
    CHECK(back.type == t);
    CHECK(back.payload == f.payload);
    CHECK(frame_name(t) != "unknown");
  }
  CHECK_THROWS_AS(Frame::decode(Bytes{}), ParseError);
  CHECK_THROWS_AS(Frame::decode(Bytes{0x7f}), ParseError);

  AccreditationResult r{Verdict::Penalized, 4, 0, "pairing-check-failed", {}};
  r.ticket_id[3] = 9;
  auto rb = AccreditationResult::decode(r.encode());
  CHECK(rb.verdict == r.verdict);
  CHECK(rb.group_size == 4);
  CHECK(rb.reason == r.reason);
  CHECK(rb.ticket_id == r.ticket_id);

  GroupRoster roster{2, {"27", "21"}};
  auto rr = GroupRoster::decode(roster.encode());
  CHECK(rr.j == 2);
  CHECK(rr.pseudonyms == roster.pseudonyms);

  std::vector<Digest> ds(3);
  ds[1][0] = 1;
  CHECK(decode_digests(encode_digests(ds)) == ds);

  payment::PaymentCiphertext c{Bytes{9, 9, 9}};
  TicketId tid{};
  tid[0] = 1;
  auto [t2, c2] = decode_payment(encode_payment(tid, c));
  CHECK(t2 == tid);
  CHECK(c2 == c);
}

TEST_CASE("secrets never appear in messages") {
  World w;
  auto members = w.enrol_all({"11111111", "22222222", "33333333"});
  for (auto* m : members) m->load_card(w.sp.sell_card(5000).code);
  auto s = group_setup(members, w.rng);
  REQUIRE(s.feasible);
  auto ticket = w.verifier.issue_ticket(0);
  AccreditationMessage msg{ticket, s.roster.pseudonyms};
  std::vector<ibdt::PartialSignature> partials;
  Bytes wire;
  auto append = [&](const Bytes& b) { wire.insert(wire.end(), b.begin(), b.end()); };
  append(ticket.encode());
  append(s.roster.encode());
  for (auto* m : members) {
    partials.push_back(m->sign_ticket(msg));
    append(partials.back().serialize());
    append(encode_digests(m->position_digests(s.salt)));
  }
  const auto prime = encode_msg_prime(msg, members[0]->combine(msg, partials));
  append(prime);
  auto verdict = w.verifier.accredit(prime, 1);
  REQUIRE(verdict.granted());
  append(verdict.encode());
  std::vector<payment::PaymentCiphertext> cts;
  for (auto* m : members) {
    cts.push_back(*m->pay(ticket));
    append(encode_payment(ticket.ticket_id, cts.back()));
  }
  auto settlement = w.verifier.forward_payments(w.sp, ticket.ticket_id, cts);
  REQUIRE(settlement.settled());
  append(settlement.encode());

  CHECK_FALSE(contains(wire, w.sp.master_secret().alpha.serialize()));
  CHECK_FALSE(contains(wire, w.sp.master_secret().gamma.serialize()));
  CHECK_FALSE(contains(wire, w.sp.payment_keys().secret_key));
  for (auto* m : members) {
    CHECK_FALSE(contains(wire, as_bytes(m->identifier().digits)));
    CHECK_FALSE(contains(wire, as_bytes(m->pay_codes().front())));
  }
  CHECK(payment::Settlement::decode(settlement.encode()).shares == settlement.shares);
}
