#include <doctest.h>

#include <array>
#include <cstring>
#include <thread>

#include "gsa/bilinear_group.hpp"
#include "gsa/errors.hpp"

using namespace gsa;
using namespace gsa::bg;

namespace {
constexpr std::array<GroupTag, 3> kTags{GroupTag::G1, GroupTag::G2, GroupTag::GT};

GroupElement random_element(GroupTag tag, Rng& rng) { return power(GroupElement::generator(tag), Scalar::random(rng)); }
}  // namespace

TEST_CASE("combine has identity and inverses") {
  Rng rng(1);
  for (auto tag : kTags) {
    CAPTURE(tag_name(tag));
    auto g = random_element(tag, rng);
    CHECK(combine(g, GroupElement::identity(tag)) == g);
    CHECK(combine(g, g.inverse()).is_identity());
  }
}

TEST_CASE("combine rejects mismatched groups") {
  auto a = GroupElement::generator(GroupTag::G1);
  auto b = GroupElement::generator(GroupTag::G2);
  CHECK_THROWS_AS(combine(a, b), ContractViolation);
}

TEST_CASE("each counted call increments exactly one counter") {
  auto g = GroupElement::generator(GroupTag::G1);
  auto h = GroupElement::generator(GroupTag::G2);
  CounterScope scope("unit");
  CHECK(scope.counters().multiplications == 0);
  combine(g, g);
  CHECK(scope.counters().multiplications == 1);
  power(g, Scalar::from_u64(3));
  CHECK(scope.counters().exponentiations == 1);
  pairing(g, h);
  CHECK(scope.counters().pairings == 1);
  CHECK(scope.counters().context_label == "unit");
  scope.reset();
  CHECK(scope.counters().same_counts(OpCounters{}));
}

TEST_CASE("power follows the exponent laws") {
  Rng rng(2);
  for (auto tag : kTags) {
    CAPTURE(tag_name(tag));
    auto a = random_element(tag, rng);
    CHECK(power(a, Scalar::from_u64(1)) == a);
    CHECK(power(a, Scalar()).is_identity());
    auto x = Scalar::random(rng);
    auto y = Scalar::random(rng);
    auto g = GroupElement::generator(tag);
    CHECK(power(power(g, x), y) == power(g, x * y));
    CHECK(combine(power(g, x), power(g, y)) == power(g, x + y));
  }
}

TEST_CASE("pairing is bilinear") {
  Rng rng(3);
  const auto g1 = GroupElement::generator(GroupTag::G1);
  const auto g2 = GroupElement::generator(GroupTag::G2);
  const auto base = pairing(g1, g2);
  CHECK_FALSE(base.is_identity());
  for (int trial = 0; trial < 100; ++trial) {
    auto a = Scalar::random(rng);
    auto b = Scalar::random(rng);
    REQUIRE(pairing(power(g1, a), power(g2, b)) == power(base, a * b));
  }
}

TEST_CASE("pairing edge cases") {
  const auto g1 = GroupElement::generator(GroupTag::G1);
  const auto g2 = GroupElement::generator(GroupTag::G2);
  CHECK(pairing(GroupElement::identity(GroupTag::G1), g2).is_identity());
  CHECK(pairing(g1, GroupElement::identity(GroupTag::G2)).is_identity());
  CHECK_THROWS_AS(pairing(g2, g1), ContractViolation);
  CHECK_THROWS_AS(pairing(g1, g1), ContractViolation);
  CHECK_THROWS_AS(pairing(pairing(g1, g2), g2), ContractViolation);
}

TEST_CASE("scalar arithmetic") {
  Rng rng(4);
  auto a = Scalar::random(rng);
  CHECK(a * a.inverse() == Scalar::from_u64(1));
  CHECK(a + (-a) == Scalar());
  CHECK(a - a == Scalar());
  CHECK_THROWS_AS(Scalar().inverse(), ContractViolation);
  CHECK(Scalar::hash("d", as_bytes("x")) == Scalar::hash("d", as_bytes("x")));
  CHECK_FALSE(Scalar::hash("d", as_bytes("x")) == Scalar::hash("e", as_bytes("x")));
}

TEST_CASE("serialization round-trips") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = Scalar::random(rng);
    CHECK(Scalar::deserialize(s.serialize()) == s);
    for (auto tag : kTags) {
      auto e = random_element(tag, rng);
      auto bytes = e.serialize();
      CHECK(bytes.size() == GroupElement::encoded_size(tag));
      CHECK(bytes[0] == static_cast<std::uint8_t>(tag));
      auto back = GroupElement::deserialize(bytes);
      CHECK(back == e);
      CHECK(back.serialize() == bytes);
    }
  }
  for (auto tag : kTags) CHECK(GroupElement::deserialize(GroupElement::identity(tag).serialize()).is_identity());
}

TEST_CASE("malformed encodings are rejected") {
  std::array<std::uint8_t, 32> big;
  big.fill(0xff);
  CHECK_THROWS_AS(Scalar::deserialize(big), ParseError);
  CHECK_THROWS_AS(Scalar::deserialize(ByteView(big.data(), 31)), ParseError);

  auto g = GroupElement::generator(GroupTag::G1).serialize();
  CHECK_THROWS_AS(GroupElement::deserialize(ByteView(g.data(), g.size() - 1)), ParseError);
  g[0] = 0x04;
  CHECK_THROWS_AS(GroupElement::deserialize(g), ParseError);
  CHECK_THROWS_AS(GroupElement::deserialize(Bytes{}), ParseError);
}

TEST_CASE("points outside the prime-order subgroup are rejected") {
  // Compressed x-coordinates 1, 2, 3, ... give on-curve points; almost all
  // of them lie outside the order-r subgroup because of the cofactor.
  int g1_rejected = 0;
  for (std::uint8_t x = 1; x < 40 && g1_rejected < 3; ++x) {
    std::array<std::uint8_t, 48> comp{};
    comp[0] = 0x80;
    comp[47] = x;
    blst_p1_affine a;
    if (blst_p1_uncompress(&a, comp.data()) != BLST_SUCCESS) continue;
    if (blst_p1_affine_in_g1(&a)) continue;
    Bytes enc{0x01};
    enc.insert(enc.end(), comp.begin(), comp.end());
    CHECK_THROWS_WITH_AS(GroupElement::deserialize(enc), doctest::Contains("subgroup"), ParseError);
    ++g1_rejected;
  }
  CHECK(g1_rejected == 3);

  int g2_rejected = 0;
  for (std::uint8_t x = 1; x < 40 && g2_rejected < 3; ++x) {
    std::array<std::uint8_t, 96> comp{};
    comp[0] = 0x80;
    comp[95] = x;
    blst_p2_affine a;
    if (blst_p2_uncompress(&a, comp.data()) != BLST_SUCCESS) continue;
    if (blst_p2_affine_in_g2(&a)) continue;
    Bytes enc{0x02};
    enc.insert(enc.end(), comp.begin(), comp.end());
    CHECK_THROWS_WITH_AS(GroupElement::deserialize(enc), doctest::Contains("subgroup"), ParseError);
    ++g2_rejected;
  }
  CHECK(g2_rejected == 3);

  // An arbitrary Fp12 element is not in GT.
  Bytes gt(GroupElement::kGTSize, 0);
  gt[0] = 0x03;
  gt[48] = 2;
  gt[2 * 48] = 5;
  CHECK_THROWS_AS(GroupElement::deserialize(gt), ParseError);
}

TEST_CASE("counter scopes") {
  const auto g = GroupElement::generator(GroupTag::G1);
  const auto h = GroupElement::generator(GroupTag::G2);

  SUBCASE("empty scope counts nothing") {
    auto c = count_operations("empty", [] {});
    CHECK(c.same_counts(OpCounters{0, 0, 0, ""}));
  }
  SUBCASE("one pairing") {
    auto c = count_operations("pair", [&] { pairing(g, h); });
    CHECK(c.same_counts(OpCounters{0, 0, 1, ""}));
  }
  SUBCASE("nested scopes flow into the parent, siblings sum") {
    CounterScope outer("outer");
    OpCounters first, second;
    {
      CounterScope inner("a");
      combine(g, g);
      power(g, Scalar::from_u64(2));
      first = inner.counters();
    }
    {
      CounterScope inner("b");
      pairing(g, h);
      combine(h, h);
      second = inner.counters();
    }
    const auto& total = outer.counters();
    CHECK(first.multiplications <= total.multiplications);
    CHECK(second.pairings <= total.pairings);
    CHECK(total.multiplications == first.multiplications + second.multiplications);
    CHECK(total.exponentiations == first.exponentiations + second.exponentiations);
    CHECK(total.pairings == first.pairings + second.pairings);
  }
  SUBCASE("counts are monotone within a context") {
    CounterScope scope("monotone");
    Rng rng(6);
    std::uint64_t last = 0;
    for (int i = 0; i < 20; ++i) {
      if (rng.uniform(2) == 0) combine(g, g);
      else power(g, Scalar::from_u64(i));
      auto sum = scope.counters().multiplications + scope.counters().exponentiations;
      CHECK(sum == last + 1);
      last = sum;
    }
  }
  SUBCASE("operations outside any scope are not recorded anywhere") {
    combine(g, g);
    CounterScope after("after");
    CHECK(after.counters().multiplications == 0);
  }
}

TEST_CASE("counter scopes are per thread") {
  const auto g = GroupElement::generator(GroupTag::G1);
  CounterScope scope("main");
  std::thread worker([&] {
    CounterScope local("worker");
    for (int i = 0; i < 5; ++i) combine(g, g);
    CHECK(local.counters().multiplications == 5);
  });
  worker.join();
  CHECK(scope.counters().multiplications == 0);
}
