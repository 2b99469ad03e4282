#include "gsa/keymgmt.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "gsa/errors.hpp"

namespace gsa::keymgmt {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::uint64_t pow10(std::size_t d) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < d; ++i) v *= 10;
  return v;
}

void check_params(const KeyParams& p) {
  if (p.positions == 0) throw DomainError("key vector needs at least one position");
  if (p.digits == 0 || p.digits > kMaxDigits) throw DomainError("digits per position must be in [1, 18]");
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw DomainError("malformed pseudonym");
  return v;
}

long double to_long_double(const cpp_rational& q) { return q.convert_to<long double>(); }

// Exact evaluation is cheap while the rational stays around a few
// thousand decimal digits.
constexpr std::size_t kExactDigitBudget = 20000;

cpp_rational rational_pow(const cpp_rational& base, std::size_t e) {
  cpp_rational acc = 1, b = base;
  while (e) {
    if (e & 1) acc *= b;
    b *= b;
    e >>= 1;
  }
  return acc;
}

}  // namespace

UserIdentifier UserIdentifier::parse(std::string_view text) {
  if (!all_digits(text)) throw DomainError("identifier must be a non-empty decimal digit string");
  return {std::string(text)};
}

std::string encode_pseudonym(std::size_t j, std::uint64_t chunk, const KeyParams& params) {
  check_params(params);
  if (j < 1 || j > params.positions) throw DomainError("position out of range");
  if (chunk >= pow10(params.digits)) throw DomainError("chunk has more than d digits");
  std::string c = std::to_string(chunk);
  c.insert(0, params.digits - c.size(), '0');
  if (params.positions > kMaxCompactPositions) return std::to_string(j) + "." + c;
  return std::to_string(j) + c;
}

DecodedPseudonym decode_pseudonym(std::string_view s, const KeyParams& params) {
  check_params(params);
  std::string_view pos, chunk;
  if (params.positions > kMaxCompactPositions) {
    const auto dot = s.find('.');
    if (dot == std::string_view::npos) throw DomainError("malformed pseudonym");
    pos = s.substr(0, dot);
    chunk = s.substr(dot + 1);
    if (!all_digits(pos) || pos.front() == '0') throw DomainError("malformed pseudonym");
  } else {
    if (s.size() != 1 + params.digits) throw DomainError("malformed pseudonym");
    pos = s.substr(0, 1);
    chunk = s.substr(1);
  }
  if (!all_digits(pos) || !all_digits(chunk) || chunk.size() != params.digits)
    throw DomainError("malformed pseudonym");
  DecodedPseudonym out{parse_u64(pos), parse_u64(chunk)};
  if (out.position < 1 || out.position > params.positions) throw DomainError("pseudonym position out of range");
  return out;
}

KeyVector derive_key_vector(const UserIdentifier& id, std::size_t l, std::size_t d) {
  KeyParams params{l, d};
  check_params(params);
  if (!all_digits(id.digits)) throw DomainError("identifier must be a non-empty decimal digit string");
  if (id.length() / d < l) throw DomainError("identifier shorter than l*d digits");
  KeyVector kv;
  kv.params = params;
  kv.entries.reserve(l);
  for (std::size_t j = 1; j <= l; ++j) {
    const auto chunk = std::string_view(id.digits).substr(id.length() - j * d, d);
    kv.entries.push_back(encode_pseudonym(j, parse_u64(chunk), params));
  }
  return kv;
}

long double failure_probability(std::size_t l, std::size_t n, std::size_t d) {
  if (l == 0 || n == 0 || d == 0) throw DomainError("l, n and d must be positive");
  if (d < 20 && n > pow10(d)) return 1.0L;

  if (d * n * l <= kExactDigitBudget) {
    const cpp_int base = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(d));
    cpp_int num = 1, den = 1;
    for (std::size_t i = 0; i < n; ++i) {
      num *= base - i;
      den *= base;
    }
    return to_long_double(rational_pow(1 - cpp_rational(num, den), l));
  }

  // log-domain fallback: P(all distinct) = prod (1 - i/10^d)
  const long double base = std::pow(10.0L, static_cast<long double>(d));
  long double log_distinct = 0;
  for (std::size_t i = 1; i < n; ++i) log_distinct += std::log1p(-static_cast<long double>(i) / base);
  const long double miss = -std::expm1(log_distinct);
  return std::exp(static_cast<long double>(l) * std::log(miss));
}

long double failure_probability(std::size_t l, std::size_t n) {
  if (l == 0 || n == 0) throw DomainError("l and n must be positive");
  if (n > 10) return 1.0L;
  cpp_int num = 1, den = 1;
  for (std::size_t k = 10; k > 10 - n; --k) num *= k;
  for (std::size_t i = 0; i < n; ++i) den *= 10;
  return to_long_double(rational_pow(cpp_rational(den - num, den), l));
}

std::optional<IndexAgreement> agree_index(const std::vector<KeyVector>& vectors) {
  if (vectors.empty()) throw DomainError("index agreement needs at least one key vector");
  const KeyParams params = vectors.front().params;
  for (const auto& v : vectors) {
    if (v.params != params) throw DomainError("key vectors use different (l, d)");
    if (v.entries.size() != params.positions) throw DomainError("key vector length does not match l");
  }
  for (std::size_t j = 1; j <= params.positions; ++j) {
    std::set<std::string_view> seen;
    bool distinct = true;
    for (const auto& v : vectors) {
      if (!seen.insert(v.at(j)).second) {
        distinct = false;
        break;
      }
    }
    if (!distinct) continue;
    IndexAgreement out{j, {}};
    for (const auto& v : vectors) out.pseudonyms.push_back(v.at(j));
    return out;
  }
  return std::nullopt;
}

double anonymity_fraction(std::size_t d) {
  if (d == 0) throw DomainError("d must be positive");
  return std::pow(10.0, -static_cast<double>(d));
}

}  // namespace gsa::keymgmt
