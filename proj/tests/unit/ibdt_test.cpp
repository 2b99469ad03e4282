#include <doctest.h>

#include <map>
#include <memory>

#include "gsa/errors.hpp"
#include "gsa/ibdt.hpp"

using namespace gsa;
using namespace gsa::ibdt;
using bg::count_operations;
using bg::GroupTag;
using bg::OpCounters;

namespace {

struct Fixture {
  SetupResult sr;
  std::map<std::string, IdentitySecretKey> keys;

  explicit Fixture(std::size_t n_max, std::uint64_t seed = 42) {
    Rng rng(seed);
    sr = setup(128, IdentityUniverse::decimal_digits(), n_max, rng);
  }

  const PublicParams& pms() const { return sr.pms; }
  const MasterPublicKey& mpk() const { return sr.keys.mpk; }

  const IdentitySecretKey& key(const std::string& id) {
    auto it = keys.find(id);
    if (it == keys.end()) it = keys.emplace(id, keygen(sr.pms, sr.keys.mpk, sr.keys.msk, id)).first;
    return it->second;
  }

  std::vector<PartialSignature> sign_all(ByteView msg, const ThresholdPolicy& gamma, Rng& rng) {
    std::vector<PartialSignature> out;
    for (const auto& id : gamma.members) out.push_back(sign(pms(), mpk(), key(id), msg, gamma, rng));
    return out;
  }

  CombinedSignature pipeline(ByteView msg, const ThresholdPolicy& gamma, Rng& rng) {
    auto partials = sign_all(msg, gamma, rng);
    return comb(pms(), mpk(), key(gamma.members.front()), msg, gamma, partials);
  }
};

std::vector<std::string> distinct_ids(std::size_t count, Rng& rng) {
  std::vector<std::string> ids;
  while (ids.size() < count) {
    std::string id = std::to_string(10 + rng.uniform(1'000'000));
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  return ids;
}

const Bytes kMsg{'t', 'i', 'c', 'k', 'e', 't'};

}  // namespace

TEST_CASE("setup is deterministic under a fixed seed") {
  Rng a(42), b(42), c(43);
  auto x = setup(128, IdentityUniverse::decimal_digits(), 10, a);
  auto y = setup(128, IdentityUniverse::decimal_digits(), 10, b);
  auto z = setup(128, IdentityUniverse::decimal_digits(), 10, c);
  CHECK(x.pms.serialize() == y.pms.serialize());
  CHECK(x.keys.mpk.serialize() == y.keys.mpk.serialize());
  CHECK(x.keys.mpk.serialize() != z.keys.mpk.serialize());
  CHECK(master_keys_consistent(x.pms, x.keys));
  CHECK_FALSE(master_keys_consistent(x.pms, z.keys));
  CHECK(x.pms.gamma_powers.size() == 11);
  CHECK(x.pms.dummy_keys.size() == 9);
}

TEST_CASE("setup rejects unsupported configurations") {
  Rng rng(1);
  CHECK_THROWS_AS(setup(256, IdentityUniverse::decimal_digits(), 10, rng), ConfigurationError);
  CHECK_THROWS_AS(setup(128, IdentityUniverse::decimal_digits(), 0, rng), ConfigurationError);
  CHECK_THROWS_AS(setup(128, IdentityUniverse::decimal_digits(), (1u << 16) + 1, rng), ConfigurationError);
}

TEST_CASE("public parameters and keys serialize canonically") {
  Fixture f(6);
  auto pms_bytes = f.pms().serialize();
  auto back = PublicParams::deserialize(pms_bytes);
  CHECK(back.serialize() == pms_bytes);
  CHECK(back.universe == f.pms().universe);
  CHECK(MasterPublicKey::deserialize(f.mpk().serialize()).serialize() == f.mpk().serialize());
  auto sk_bytes = f.key("18").serialize();
  CHECK(IdentitySecretKey::deserialize(sk_bytes).serialize() == sk_bytes);

  // A tampered dummy identity is caught on load.
  auto tampered = f.pms();
  tampered.dummies[0] = bg::Scalar::from_u64(7);
  CHECK_THROWS_AS(PublicParams::deserialize(tampered.serialize()), ParseError);
  CHECK_THROWS_AS(PublicParams::deserialize(ByteView(pms_bytes.data(), pms_bytes.size() - 1)), ParseError);
}

TEST_CASE("keygen and the key sanity predicate") {
  Fixture f(10);
  const auto& sk = f.key("18");
  CHECK(sk.identity == "18");
  CHECK(key_is_consistent(f.pms(), f.mpk(), sk));

  auto tampered = sk;
  tampered.key = bg::GroupElement::identity(GroupTag::G1);
  CHECK_FALSE(key_is_consistent(f.pms(), f.mpk(), tampered));

  auto relabeled = sk;
  relabeled.identity = "27";
  CHECK_FALSE(key_is_consistent(f.pms(), f.mpk(), relabeled));

  CHECK_THROWS_AS(keygen(f.pms(), f.mpk(), f.sr.keys.msk, "ab"), DomainError);
  CHECK_THROWS_AS(keygen(f.pms(), f.mpk(), f.sr.keys.msk, ""), DomainError);
}

TEST_CASE("single identity round trip") {
  Fixture f(10);
  Rng rng(7);
  auto gamma = ThresholdPolicy::all_of({"18"});
  auto sigma = f.pipeline(kMsg, gamma, rng);
  auto res = verify(f.pms(), f.mpk(), kMsg, sigma, gamma);
  CHECK(res.valid);
  CHECK(res.reason == VerifyReason::Valid);
}

TEST_CASE("correctness for every threshold up to n_max") {
  Rng rng(2024);
  std::map<std::size_t, std::unique_ptr<Fixture>> fixtures;
  for (std::size_t t = 2; t <= 10; ++t) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n_max = t + rng.uniform(11 - t);
      auto& fx = fixtures[n_max];
      if (!fx) fx = std::make_unique<Fixture>(n_max, 100 + n_max);
      auto gamma = ThresholdPolicy::all_of(distinct_ids(t, rng));
      Bytes msg(16);
      rng.fill(msg);
      auto sigma = fx->pipeline(msg, gamma, rng);
      CAPTURE(t);
      CAPTURE(n_max);
      REQUIRE(verify(fx->pms(), fx->mpk(), msg, sigma, gamma).valid);
    }
  }
}

TEST_CASE("sign is randomized, comb is deterministic") {
  Fixture f(5);
  auto gamma = ThresholdPolicy::all_of({"18", "27", "36"});
  Rng r1(1), r2(2);
  auto p1 = sign(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, r1);
  auto p2 = sign(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, r2);
  CHECK(p1.serialize() != p2.serialize());
  CHECK(p1.policy_digest == p2.policy_digest);

  Rng rng(3);
  auto partials = f.sign_all(kMsg, gamma, rng);
  auto a = comb(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, partials);
  auto b = comb(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, partials);
  CHECK(a.serialize() == b.serialize());

  // Partial order does not matter; any member may combine.
  std::reverse(partials.begin(), partials.end());
  auto c = comb(f.pms(), f.mpk(), f.key("36"), kMsg, gamma, partials);
  CHECK(c.serialize() == a.serialize());
}

TEST_CASE("comb enforces its preconditions") {
  Fixture f(5);
  Rng rng(9);
  auto gamma = ThresholdPolicy::all_of({"18", "27", "36"});
  auto partials = f.sign_all(kMsg, gamma, rng);

  SUBCASE("too few partials") {
    auto fewer = partials;
    fewer.pop_back();
    CHECK_THROWS_AS(comb(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, fewer), ThresholdError);
  }
  SUBCASE("duplicate signer") {
    auto dup = partials;
    dup[2] = dup[0];
    CHECK_THROWS_AS(comb(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, dup), PolicyError);
  }
  SUBCASE("partial bound to another message") {
    auto other = partials;
    other[1] = sign(f.pms(), f.mpk(), f.key("27"), Bytes{'x'}, gamma, rng);
    CHECK_THROWS_AS(comb(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, other), BindingError);
  }
  SUBCASE("partial from outside the policy") {
    auto outsider_gamma = ThresholdPolicy::all_of({"18", "27", "45"});
    auto other = partials;
    other[2] = sign(f.pms(), f.mpk(), f.key("45"), kMsg, outsider_gamma, rng);
    CHECK_THROWS_AS(comb(f.pms(), f.mpk(), f.key("18"), kMsg, gamma, other), PolicyError);
  }
  SUBCASE("combiner outside the policy") {
    CHECK_THROWS_AS(comb(f.pms(), f.mpk(), f.key("45"), kMsg, gamma, partials), PolicyError);
  }
  SUBCASE("extra partials beyond t are ignored") {
    auto bigger = ThresholdPolicy{3, {"18", "27", "36"}};
    auto sigma = comb(f.pms(), f.mpk(), f.key("18"), kMsg, bigger, partials);
    CHECK(verify(f.pms(), f.mpk(), kMsg, sigma, bigger).valid);
  }
}

TEST_CASE("sign rejects signers outside the policy and partial thresholds") {
  Fixture f(5);
  Rng rng(10);
  auto gamma = ThresholdPolicy::all_of({"18", "27"});
  CHECK_THROWS_AS(sign(f.pms(), f.mpk(), f.key("36"), kMsg, gamma, rng), PolicyError);

  ThresholdPolicy partial_threshold{1, {"18", "27"}};
  CHECK_THROWS_AS(sign(f.pms(), f.mpk(), f.key("18"), kMsg, partial_threshold, rng), PolicyError);
  ThresholdPolicy duplicated{2, {"18", "18"}};
  CHECK_THROWS_AS(sign(f.pms(), f.mpk(), f.key("18"), kMsg, duplicated, rng), PolicyError);
  auto too_big = ThresholdPolicy::all_of({"10", "11", "12", "13", "14", "15"});
  CHECK_THROWS_AS(sign(f.pms(), f.mpk(), f.key("10"), kMsg, too_big, rng), PolicyError);
}

TEST_CASE("verify is total and reports why it rejects") {
  Fixture f(5);
  Rng rng(11);
  auto gamma = ThresholdPolicy::all_of({"18", "27", "36"});
  auto sigma = f.pipeline(kMsg, gamma, rng);
  REQUIRE(verify(f.pms(), f.mpk(), kMsg, sigma, gamma).valid);

  const Bytes other_msg{'o', 't', 'h', 'e', 'r'};
  CHECK(verify(f.pms(), f.mpk(), other_msg, sigma, gamma).reason == VerifyReason::BindingMismatch);

  // Rebinding the digest to the other message still fails the pairing check.
  auto rebound = sigma;
  rebound.policy_digest = binding_digest(other_msg, gamma);
  CHECK(verify(f.pms(), f.mpk(), other_msg, rebound, gamma).reason == VerifyReason::PairingCheckFailed);

  auto other_policy = ThresholdPolicy::all_of({"18", "27", "45"});
  CHECK_FALSE(verify(f.pms(), f.mpk(), kMsg, sigma, other_policy).valid);
  CHECK(verify(f.pms(), f.mpk(), kMsg, sigma, ThresholdPolicy{2, gamma.members}).reason ==
        VerifyReason::UnsupportedThreshold);
  CHECK(verify(f.pms(), f.mpk(), kMsg, sigma, ThresholdPolicy{0, {}}).reason == VerifyReason::InvalidPolicy);
  CHECK(verify(f.pms(), f.mpk(), kMsg, Bytes{1, 2, 3}, gamma).reason == VerifyReason::MalformedSignature);
  CHECK(verify(f.pms(), f.mpk(), kMsg, Bytes{}, gamma).reason == VerifyReason::MalformedSignature);

  auto swapped = sigma;
  swapped.sigma1 = bg::GroupElement::identity(GroupTag::G1);
  CHECK(verify(f.pms(), f.mpk(), kMsg, swapped, gamma).reason == VerifyReason::PairingCheckFailed);
}

TEST_CASE("threshold soundness: t-1 signers cannot produce a valid signature") {
  Fixture f(10);
  Rng rng(12);
  for (std::size_t t = 2; t <= 6; ++t) {
    auto gamma = ThresholdPolicy::all_of(distinct_ids(t, rng));
    auto partials = f.sign_all(kMsg, gamma, rng);
    for (std::size_t drop = 0; drop < t; ++drop) {
      auto fewer = partials;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(drop));
      const auto& combiner = f.key(gamma.members[drop == 0 ? 1 : 0]);
      CHECK_THROWS_AS(comb(f.pms(), f.mpk(), combiner, kMsg, gamma, fewer), ThresholdError);

      // Substitute the missing partial with one from an outsider,
      // relabelled as the absent member.
      auto outsider_gamma = gamma;
      outsider_gamma.members[drop] = "999999999";
      auto forged = sign(f.pms(), f.mpk(), f.key("999999999"), kMsg, outsider_gamma, rng);
      forged.signer_identity = gamma.members[drop];
      forged.policy_digest = partials[drop].policy_digest;
      auto attempt = fewer;
      attempt.push_back(forged);
      auto sigma = comb(f.pms(), f.mpk(), combiner, kMsg, gamma, attempt);
      CHECK_FALSE(verify(f.pms(), f.mpk(), kMsg, sigma, gamma).valid);

      // Or with the absent member's partial on a different message.
      auto stale = sign(f.pms(), f.mpk(), f.key(gamma.members[drop]), Bytes{'o', 'l', 'd'}, gamma, rng);
      stale.policy_digest = partials[drop].policy_digest;
      attempt.back() = stale;
      sigma = comb(f.pms(), f.mpk(), combiner, kMsg, gamma, attempt);
      CHECK_FALSE(verify(f.pms(), f.mpk(), kMsg, sigma, gamma).valid);
    }
  }
}

TEST_CASE("flipping any byte of a signature invalidates it") {
  Fixture f(5);
  Rng rng(13);
  auto gamma = ThresholdPolicy::all_of({"18", "27", "36"});
  const auto bytes = f.pipeline(kMsg, gamma, rng).serialize();
  for (int trial = 0; trial < 100; ++trial) {
    auto flipped = bytes;
    const auto pos = rng.uniform(flipped.size());
    flipped[pos] ^= static_cast<std::uint8_t>(1 + rng.uniform(255));
    CAPTURE(pos);
    CHECK_FALSE(verify(f.pms(), f.mpk(), kMsg, flipped, gamma).valid);
  }
}

TEST_CASE("combined signature size does not depend on t") {
  Fixture f(8);
  Rng rng(14);
  std::size_t size = 0;
  for (std::size_t t = 1; t <= 8; ++t) {
    auto bytes = f.pipeline(kMsg, ThresholdPolicy::all_of(distinct_ids(t, rng)), rng).serialize();
    if (size == 0) size = bytes.size();
    CHECK(bytes.size() == size);
  }
  CHECK(size == 2 + 4 + 49 + 4 + 97 + 4 + 32);
}

TEST_CASE("partial signatures round-trip through their encoding") {
  Fixture f(4);
  Rng rng(15);
  auto gamma = ThresholdPolicy::all_of({"18", "27"});
  for (const auto& p : f.sign_all(kMsg, gamma, rng)) {
    auto bytes = p.serialize();
    auto back = PartialSignature::deserialize(bytes);
    CHECK(back.serialize() == bytes);
    CHECK(back.signer_identity == p.signer_identity);
  }
  CHECK(ThresholdPolicy::decode(gamma.encode()) == gamma);
}

TEST_CASE("precomputed phases are equivalent to the plain algorithms") {
  Fixture f(10);
  Rng rng(16);
  for (int trial = 0; trial < 5; ++trial) {
    auto gamma = ThresholdPolicy::all_of(distinct_ids(1 + rng.uniform(10), rng));
    std::vector<PartialSignature> partials;
    for (const auto& id : gamma.members) {
      auto pre = sign_precompute(f.pms(), f.mpk(), f.key(id), gamma);
      partials.push_back(fast_sign(pre, kMsg, gamma, rng));
    }
    const auto& combiner = f.key(gamma.members.back());
    auto plain = comb(f.pms(), f.mpk(), combiner, kMsg, gamma, partials);
    auto fast = fast_comb(comb_precompute(f.pms(), f.mpk(), combiner, gamma), kMsg, partials);
    CHECK(plain.serialize() == fast.serialize());
    CHECK(verify(f.pms(), f.mpk(), kMsg, fast, gamma).valid);
  }
}

TEST_CASE("precomputations are bound to their policy") {
  Fixture f(5);
  Rng rng(17);
  auto gamma = ThresholdPolicy::all_of({"18", "27"});
  auto other = ThresholdPolicy::all_of({"18", "36"});
  auto pre = sign_precompute(f.pms(), f.mpk(), f.key("18"), gamma);
  CHECK_THROWS_AS(fast_sign(pre, kMsg, other, rng), BindingError);

  // Partials made with a stale precomputation are refused by the combiner.
  auto stale = fast_sign(pre, kMsg, rng);
  auto fresh = sign(f.pms(), f.mpk(), f.key("36"), kMsg, other, rng);
  auto cpre = comb_precompute(f.pms(), f.mpk(), f.key("36"), other);
  CHECK_THROWS_AS(fast_comb(cpre, kMsg, {stale, fresh}), BindingError);
}

// Operation counts of this construction, as functions of n = n_max and t.
TEST_CASE("operation counts follow the realized cost formulas") {
  for (std::size_t n : {5u, 10u}) {
    Fixture f(n);
    Rng rng(18);
    const std::size_t t = n == 10 ? 4 : 3;
    auto gamma = ThresholdPolicy::all_of(distinct_ids(t, rng));
    for (const auto& id : gamma.members) f.key(id);
    CAPTURE(n);

    Rng setup_rng(1);
    auto c = count_operations("setup", [&] { setup(128, IdentityUniverse::decimal_digits(), n, setup_rng); });
    CHECK(c.same_counts({0, 2 * n, 1, ""}));

    c = count_operations("keygen", [&] { keygen(f.pms(), f.mpk(), f.sr.keys.msk, "18"); });
    CHECK(c.same_counts({0, 1, 0, ""}));

    const auto& signer = f.key(gamma.members[0]);
    c = count_operations("sign", [&] { sign(f.pms(), f.mpk(), signer, kMsg, gamma, rng); });
    CHECK(c.same_counts({n + 1, n + 4, 0, ""}));

    SignPrecomputation spre;
    c = count_operations("sign-pc", [&] { spre = sign_precompute(f.pms(), f.mpk(), signer, gamma); });
    CHECK(c.same_counts({n, n + 2, 0, ""}));
    c = count_operations("fast-sign", [&] { fast_sign(spre, kMsg, rng); });
    CHECK(c.same_counts({1, 2, 0, ""}));

    auto partials = f.sign_all(kMsg, gamma, rng);
    CombinedSignature sigma;
    c = count_operations("comb", [&] { sigma = comb(f.pms(), f.mpk(), signer, kMsg, gamma, partials); });
    CHECK(c.same_counts({n + t - 1, n - t, 0, ""}));

    CombPrecomputation cpre;
    c = count_operations("comb-pc", [&] { cpre = comb_precompute(f.pms(), f.mpk(), signer, gamma); });
    CHECK(c.same_counts({n - t, n - t, 0, ""}));
    c = count_operations("fast-comb", [&] { fast_comb(cpre, kMsg, partials); });
    CHECK(c.same_counts({2 * t - 1, 0, 0, ""}));

    c = count_operations("verify", [&] { CHECK(verify(f.pms(), f.mpk(), kMsg, sigma, gamma).valid); });
    CHECK(c.same_counts({n + 1, n + 1, 2, ""}));
  }
}

TEST_CASE("fast-phase cost does not depend on n or t") {
  std::optional<OpCounters> reference;
  for (std::size_t n : {2u, 5u, 10u}) {
    Fixture f(n);
    Rng rng(19);
    for (std::size_t t = 2; t <= n; ++t) {
      auto gamma = ThresholdPolicy::all_of(distinct_ids(t, rng));
      auto pre = sign_precompute(f.pms(), f.mpk(), f.key(gamma.members[0]), gamma);
      auto c = count_operations("fast-sign", [&] { fast_sign(pre, kMsg, rng); });
      if (!reference) reference = c;
      CAPTURE(n);
      CAPTURE(t);
      CHECK(c.same_counts(*reference));
    }
  }
}
