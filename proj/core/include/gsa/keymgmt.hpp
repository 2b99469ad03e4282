#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gsa::keymgmt {

/// Opaque decimal identifier n_U (national id, phone number, ...).
/// digits.back() is the last digit d_1.
struct UserIdentifier {
  std::string digits;

  /// Throws DomainError unless `text` is a non-empty run of decimal digits.
  static UserIdentifier parse(std::string_view text);
  std::size_t length() const noexcept { return digits.size(); }
  bool operator==(const UserIdentifier&) const = default;
};

struct KeyParams {
  std::size_t positions = 4;  // l
  std::size_t digits = 1;     // d
  bool operator==(const KeyParams&) const = default;
};

/// Above this many positions the separator form "j.chunk" is used.
inline constexpr std::size_t kMaxCompactPositions = 9;
inline constexpr std::size_t kMaxDigits = 18;

/// Pseudonym for position j (1-based) carrying `chunk`, zero-padded to d digits.
std::string encode_pseudonym(std::size_t j, std::uint64_t chunk, const KeyParams& params);

struct DecodedPseudonym {
  std::size_t position;
  std::uint64_t chunk;
  bool operator==(const DecodedPseudonym&) const = default;
};
/// Inverse of encode_pseudonym; throws DomainError on strings no encoding produces.
DecodedPseudonym decode_pseudonym(std::string_view pseudonym, const KeyParams& params);

struct KeyVector {
  std::vector<std::string> entries;
  KeyParams params;

  const std::string& at(std::size_t j) const { return entries.at(j - 1); }
  bool operator==(const KeyVector&) const = default;
};

/// Position j carries the j-th d-digit chunk counted from the right.
/// Throws DomainError if the identifier has fewer than l*d digits or the
/// parameters are out of range.
KeyVector derive_key_vector(const UserIdentifier& id, std::size_t l, std::size_t d);
inline KeyVector derive_key_vector(const UserIdentifier& id, const KeyParams& p) {
  return derive_key_vector(id, p.positions, p.digits);
}

/// F(l,n,d) = (1 - 10^d (10^d - 1) ... (10^d - n + 1) / 10^{dn})^l, exactly 1 for n > 10^d.
long double failure_probability(std::size_t l, std::size_t n, std::size_t d);
/// The d = 1 form F(l,n) = (1 - 10*9*...*(10-n+1) / 10^n)^l.
long double failure_probability(std::size_t l, std::size_t n);

struct IndexAgreement {
  std::size_t j = 0;
  std::vector<std::string> pseudonyms;
};

/// Smallest j at which the vectors' entries are pairwise distinct; the
/// pseudonyms keep input order (master first, then join order).
/// nullopt if no position works. Throws DomainError on empty input or
/// mixed parameters.
std::optional<IndexAgreement> agree_index(const std::vector<KeyVector>& vectors);

/// Expected share of users holding any given pseudonym: 10^-d.
double anonymity_fraction(std::size_t d);

}  // namespace gsa::keymgmt
