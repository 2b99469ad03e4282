#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gsa/errors.hpp"
#include "gsa/keymgmt.hpp"

using namespace gsa;
using namespace gsa::keymgmt;

namespace {

// Independent slicing oracle: position j takes the characters
// [len - j*d, len - (j-1)*d) and is prefixed by j.
std::vector<std::string> slice_oracle(const std::string& id, std::size_t l, std::size_t d) {
  std::vector<std::string> out;
  for (std::size_t j = 1; j <= l; ++j) out.push_back(std::to_string(j) + id.substr(id.size() - j * d, d));
  return out;
}

std::string random_identifier(std::mt19937_64& gen, std::size_t length) {
  std::uniform_int_distribution<int> digit(0, 9);
  std::string s(length, '0');
  for (auto& c : s) c = static_cast<char>('0' + digit(gen));
  return s;
}

// Plain floating evaluation of the closed form, used as a second route.
long double closed_form(std::size_t l, std::size_t n, std::size_t d) {
  const long double base = std::pow(10.0L, static_cast<long double>(d));
  long double distinct = 1;
  for (std::size_t i = 0; i < n; ++i) distinct *= (base - static_cast<long double>(i)) / base;
  return std::pow(1 - distinct, static_cast<long double>(l));
}

// Exhaustive count of groups with no collision-free position over every
// assignment of the relevant digits.
long double brute_force(std::size_t l, std::size_t n, std::size_t d) {
  const std::size_t width = l * d;
  std::size_t total = 1;
  for (std::size_t i = 0; i < width * n; ++i) total *= 10;
  std::size_t failures = 0;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<KeyVector> vectors;
    std::size_t rest = code;
    for (std::size_t u = 0; u < n; ++u) {
      std::string id(width, '0');
      for (auto& c : id) {
        c = static_cast<char>('0' + rest % 10);
        rest /= 10;
      }
      vectors.push_back(derive_key_vector(UserIdentifier::parse(id), l, d));
    }
    if (!agree_index(vectors)) ++failures;
  }
  return static_cast<long double>(failures) / static_cast<long double>(total);
}

}  // namespace

TEST_CASE("key vector derivation") {
  auto id = UserIdentifier::parse("12345678");
  CHECK(derive_key_vector(id, 4, 1).entries == std::vector<std::string>{"18", "27", "36", "45"});
  CHECK(derive_key_vector(id, 1, 1).entries == std::vector<std::string>{"18"});
  CHECK(derive_key_vector(id, 2, 2).entries == std::vector<std::string>{"178", "256"});
  CHECK(derive_key_vector(id, 8, 1).entries == slice_oracle("12345678", 8, 1));
  CHECK(derive_key_vector(id, 2, 3).entries == std::vector<std::string>{"1678", "2345"});
  CHECK(derive_key_vector(UserIdentifier::parse("00000"), 2, 2).entries == std::vector<std::string>{"100", "200"});

  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t l = 1 + gen() % 9, d = 1 + gen() % 3;
    const auto s = random_identifier(gen, l * d + gen() % 4);
    CHECK(derive_key_vector(UserIdentifier::parse(s), l, d).entries == slice_oracle(s, l, d));
  }
}

TEST_CASE("key vector derivation rejects bad input") {
  CHECK_THROWS_AS(derive_key_vector(UserIdentifier::parse("1234"), 3, 2), DomainError);
  CHECK_THROWS_AS(derive_key_vector(UserIdentifier::parse("1234"), 0, 1), DomainError);
  CHECK_THROWS_AS(derive_key_vector(UserIdentifier::parse("1234"), 1, 0), DomainError);
  CHECK_THROWS_AS(UserIdentifier::parse(""), DomainError);
  CHECK_THROWS_AS(UserIdentifier::parse("12a4"), DomainError);
  CHECK_THROWS_AS(derive_key_vector(UserIdentifier{"12-4"}, 1, 1), DomainError);
}

TEST_CASE("pseudonym encoding is injective and decodes back") {
  for (std::size_t l = 1; l <= 9; ++l) {
    for (std::size_t d = 1; d <= 3; ++d) {
      const KeyParams p{l, d};
      std::set<std::string> seen;
      std::size_t chunks = 1;
      for (std::size_t i = 0; i < d; ++i) chunks *= 10;
      for (std::size_t j = 1; j <= l; ++j) {
        for (std::uint64_t c = 0; c < chunks; ++c) {
          auto s = encode_pseudonym(j, c, p);
          CHECK(seen.insert(s).second);
          CHECK(decode_pseudonym(s, p) == DecodedPseudonym{j, c});
        }
      }
      CHECK(seen.size() == l * chunks);
    }
  }
}

TEST_CASE("separator encoding for more than nine positions") {
  const KeyParams p{12, 2};
  CHECK(encode_pseudonym(1, 12, p) == "1.12");
  CHECK(encode_pseudonym(11, 2, p) == "11.02");
  std::set<std::string> seen;
  for (std::size_t j = 1; j <= 12; ++j)
    for (std::uint64_t c = 0; c < 100; ++c) {
      auto s = encode_pseudonym(j, c, p);
      CHECK(seen.insert(s).second);
      CHECK(decode_pseudonym(s, p) == DecodedPseudonym{j, c});
    }
  auto kv = derive_key_vector(UserIdentifier::parse(std::string(24, '7')), 12, 2);
  CHECK(kv.entries.front() == "1.77");
  CHECK(kv.entries.back() == "12.77");
}

TEST_CASE("malformed pseudonyms are refused") {
  const KeyParams p{4, 1};
  CHECK_THROWS_AS(decode_pseudonym("", p), DomainError);
  CHECK_THROWS_AS(decode_pseudonym("1", p), DomainError);
  CHECK_THROWS_AS(decode_pseudonym("58", p), DomainError);
  CHECK_THROWS_AS(decode_pseudonym("08", p), DomainError);
  CHECK_THROWS_AS(decode_pseudonym("1x", p), DomainError);
  CHECK_THROWS_AS(decode_pseudonym("188", p), DomainError);
  CHECK_THROWS_AS(decode_pseudonym("1.8", KeyParams{12, 2}), DomainError);
  CHECK_THROWS_AS(decode_pseudonym("01.08", KeyParams{12, 2}), DomainError);
  CHECK_THROWS_AS(encode_pseudonym(5, 1, p), DomainError);
  CHECK_THROWS_AS(encode_pseudonym(1, 10, p), DomainError);
}

TEST_CASE("failure probability closed values") {
  for (std::size_t l = 1; l <= 8; ++l) {
    CHECK(failure_probability(l, 1, 1) == 0.0L);
    CHECK(failure_probability(l, 11, 1) == 1.0L);
    CHECK(failure_probability(l, 101, 2) == 1.0L);
  }
  CHECK(static_cast<double>(failure_probability(4, 2, 1)) == doctest::Approx(1.0e-4).epsilon(1e-12));
  CHECK(static_cast<double>(failure_probability(1, 2, 1)) == doctest::Approx(0.1).epsilon(1e-12));
  // 1 - 10*9*8*7/10^4 = 0.496
  CHECK(static_cast<double>(failure_probability(1, 4, 1)) == doctest::Approx(0.496).epsilon(1e-12));
  CHECK(failure_probability(3, 10, 1) > 0.99);
  CHECK_THROWS_AS(failure_probability(0, 1, 1), DomainError);
}

TEST_CASE("failure probability agrees with independent evaluations") {
  for (std::size_t l = 1; l <= 8; ++l)
    for (std::size_t n = 1; n <= 12; ++n)
      for (std::size_t d = 1; d <= 3; ++d) {
        const auto f = failure_probability(l, n, d);
        CAPTURE(l);
        CAPTURE(n);
        CAPTURE(d);
        CHECK(std::fabs(f - closed_form(l, n, d)) <= 1e-15L * std::max(f, 1e-300L) + 1e-300L);
      }
  // Large sizes take the log-domain route.
  const auto big = failure_probability(50, 500, 3);
  CHECK(std::fabs(big - closed_form(50, 500, 3)) <= 1e-12L * big);

  CHECK(failure_probability(2, 2, 1) == doctest::Approx(static_cast<double>(brute_force(2, 2, 1))));
  CHECK(failure_probability(2, 3, 1) == doctest::Approx(static_cast<double>(brute_force(2, 3, 1))));
  CHECK(failure_probability(1, 2, 2) == doctest::Approx(static_cast<double>(brute_force(1, 2, 2))));
}

TEST_CASE("the d = 1 form matches the general form exactly") {
  for (std::size_t l = 1; l <= 12; ++l)
    for (std::size_t n = 1; n <= 12; ++n) CHECK(failure_probability(l, n) == failure_probability(l, n, 1));
}

TEST_CASE("failure probability is monotone") {
  for (std::size_t l = 1; l <= 8; ++l)
    for (std::size_t n = 1; n <= 12; ++n)
      for (std::size_t d = 1; d <= 2; ++d) {
        const auto f = failure_probability(l, n, d);
        CAPTURE(l);
        CAPTURE(n);
        CAPTURE(d);
        CHECK(f >= 0.0L);
        CHECK(f <= 1.0L);
        if (l < 8) CHECK(failure_probability(l + 1, n, d) <= f);
        if (n < 12) CHECK(failure_probability(l, n + 1, d) >= f);
        if (d < 2) CHECK(failure_probability(l, n, d + 1) <= f);
      }
}

TEST_CASE("Monte Carlo agreement-failure rate matches the formula") {
  struct Case {
    std::size_t l, n, d;
  };
  std::mt19937_64 gen(20240601);
  for (auto c : {Case{4, 3, 1}, Case{2, 5, 1}, Case{3, 4, 2}}) {
    const int trials = 100'000;
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
      std::vector<KeyVector> vectors;
      for (std::size_t u = 0; u < c.n; ++u)
        vectors.push_back(derive_key_vector(UserIdentifier::parse(random_identifier(gen, c.l * c.d + 2)), c.l, c.d));
      if (!agree_index(vectors)) ++failures;
    }
    const double f = static_cast<double>(failure_probability(c.l, c.n, c.d));
    const double rate = static_cast<double>(failures) / trials;
    const double se = std::sqrt(f * (1 - f) / trials);
    CAPTURE(c.l);
    CAPTURE(c.n);
    CAPTURE(c.d);
    CAPTURE(rate);
    CAPTURE(f);
    CHECK(std::fabs(rate - f) <= 3 * se);
  }
}

TEST_CASE("index agreement") {
  auto kv = [](std::vector<std::string> e) { return KeyVector{std::move(e), KeyParams{2, 1}}; };

  SUBCASE("first collision-free position") {
    auto r = agree_index({kv({"18", "27"}), kv({"18", "21"})});
    REQUIRE(r);
    CHECK(r->j == 2);
    CHECK(r->pseudonyms == std::vector<std::string>{"27", "21"});
  }
  SUBCASE("identical identifiers never agree") {
    auto v = derive_key_vector(UserIdentifier::parse("12345678"), 4, 1);
    CHECK_FALSE(agree_index({v, v}));
  }
  SUBCASE("ten distinct last digits agree at position one") {
    std::vector<KeyVector> vs;
    for (int digit = 0; digit < 10; ++digit)
      vs.push_back(derive_key_vector(UserIdentifier::parse("5555555" + std::to_string(digit)), 4, 1));
    auto r = agree_index(vs);
    REQUIRE(r);
    CHECK(r->j == 1);
    CHECK(r->pseudonyms.size() == 10);
    CHECK(r->pseudonyms.front() == "10");
    CHECK(r->pseudonyms.back() == "19");
  }
  SUBCASE("a single member agrees at position one") {
    auto r = agree_index({derive_key_vector(UserIdentifier::parse("12345678"), 4, 1)});
    REQUIRE(r);
    CHECK(r->j == 1);
    CHECK(r->pseudonyms == std::vector<std::string>{"18"});
  }
  SUBCASE("mixed parameters and empty groups") {
    auto a = derive_key_vector(UserIdentifier::parse("12345678"), 4, 1);
    auto b = derive_key_vector(UserIdentifier::parse("12345678"), 2, 2);
    CHECK_THROWS_AS(agree_index({a, b}), DomainError);
    CHECK_THROWS_AS(agree_index({}), DomainError);
  }
}

TEST_CASE("index agreement does not depend on member order") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + gen() % 5;
    std::vector<KeyVector> vs;
    for (std::size_t u = 0; u < n; ++u)
      vs.push_back(derive_key_vector(UserIdentifier::parse(random_identifier(gen, 4)), 4, 1));
    const auto base = agree_index(vs);
    for (int p = 0; p < 5; ++p) {
      std::shuffle(vs.begin(), vs.end(), gen);
      const auto r = agree_index(vs);
      REQUIRE(r.has_value() == base.has_value());
      if (base) {
        CHECK(r->j == base->j);
        for (std::size_t u = 0; u < n; ++u) CHECK(r->pseudonyms[u] == vs[u].at(r->j));
      }
    }
  }
}

TEST_CASE("anonymity fraction") {
  CHECK(anonymity_fraction(1) == doctest::Approx(0.10));
  CHECK(anonymity_fraction(2) == doctest::Approx(0.01));
  CHECK(anonymity_fraction(3) == doctest::Approx(0.001));
  CHECK_THROWS_AS(anonymity_fraction(0), DomainError);
}
