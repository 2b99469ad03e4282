#pragma once

// Instrumented Type-3 bilinear group over BLS12-381 (backend: blst).
//
// Group operations are written multiplicatively: `combine` is the group law,
// `power` is exponentiation by a scalar and `pairing` maps G1 x G2 -> GT.
// Every call to these three functions is counted in the innermost active
// CounterScope of the calling thread (and in all enclosing scopes).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include <blst.h>

#include "gsa/bytes.hpp"
#include "gsa/crypto.hpp"

namespace gsa::bg {

/// Element of Z_p, p = order of G1, G2 and GT.
class Scalar {
 public:
  static constexpr std::size_t kEncodedSize = 32;

  Scalar();  // zero
  static Scalar from_u64(std::uint64_t v);
  static Scalar random(Rng& rng);
  /// Uniform-looking field element derived from (domain, data).
  static Scalar hash(std::string_view domain, ByteView data);
  /// Fixed-width big-endian; throws ParseError unless the value is < p.
  static Scalar deserialize(ByteView bytes);

  std::array<std::uint8_t, kEncodedSize> serialize() const;

  bool is_zero() const;
  /// Throws ContractViolation for zero.
  Scalar inverse() const;

  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator*(const Scalar& o) const;
  Scalar operator-() const;
  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }
  bool operator==(const Scalar& o) const;

  /// Little-endian canonical bytes, as blst's point multiplication expects.
  blst_scalar to_blst() const;

 private:
  blst_fr v_;
};

enum class GroupTag : std::uint8_t { G1 = 0x01, G2 = 0x02, GT = 0x03 };

std::string_view tag_name(GroupTag tag);

class GroupElement {
 public:
  static constexpr std::size_t kG1Size = 1 + 48;
  static constexpr std::size_t kG2Size = 1 + 96;
  static constexpr std::size_t kGTSize = 1 + 576;

  static GroupElement generator(GroupTag tag);
  static GroupElement identity(GroupTag tag);
  /// Hash onto G1 (RFC 9380 suite BLS12381G1_XMD:SHA-256_SSWU_RO_).
  static GroupElement hash_to_g1(std::string_view domain, ByteView data);
  /// Tag byte followed by the compressed point (G1, G2) or the 12 Fp
  /// coefficients of the Fp12 element (GT). Rejects non-canonical encodings
  /// and anything outside the prime-order subgroup.
  static GroupElement deserialize(ByteView bytes);

  Bytes serialize() const;
  static std::size_t encoded_size(GroupTag tag);

  GroupTag tag() const noexcept { return static_cast<GroupTag>(value_.index() + 1); }
  bool is_identity() const;
  /// Group inverse (point negation / Fp12 conjugation). Not counted.
  GroupElement inverse() const;

  bool operator==(const GroupElement& o) const;

 private:
  using Value = std::variant<blst_p1, blst_p2, blst_fp12>;
  explicit GroupElement(Value v) : value_(v) {}

  friend GroupElement combine(const GroupElement&, const GroupElement&);
  friend GroupElement power(const GroupElement&, const Scalar&);
  friend GroupElement pairing(const GroupElement&, const GroupElement&);

  Value value_;
};

/// Group law. Throws ContractViolation if the tags differ. Counts one
/// multiplication.
GroupElement combine(const GroupElement& a, const GroupElement& b);
/// a^k. Counts one exponentiation.
GroupElement power(const GroupElement& a, const Scalar& k);
/// e(p, q) with p in G1 and q in G2; throws ContractViolation otherwise.
/// Counts one pairing.
GroupElement pairing(const GroupElement& p, const GroupElement& q);

struct OpCounters {
  std::uint64_t multiplications = 0;
  std::uint64_t exponentiations = 0;
  std::uint64_t pairings = 0;
  std::string context_label;

  bool same_counts(const OpCounters& o) const {
    return multiplications == o.multiplications && exponentiations == o.exponentiations && pairings == o.pairings;
  }
};

/// RAII accumulator for combine/power/pairing calls made by this thread
/// while the scope is alive. Scopes nest: an operation is added to the
/// innermost scope and to every enclosing one. Scopes must be destroyed in
/// reverse order of construction, which block scoping guarantees.
class CounterScope {
 public:
  explicit CounterScope(std::string label);
  ~CounterScope();
  CounterScope(const CounterScope&) = delete;
  CounterScope& operator=(const CounterScope&) = delete;

  const OpCounters& counters() const noexcept { return counters_; }
  void reset() noexcept;

 private:
  friend struct ScopeAccess;

  OpCounters counters_;
  CounterScope* parent_;
};

/// Runs `f` inside a fresh scope and returns what it counted.
template <class F>
OpCounters count_operations(std::string label, F&& f) {
  CounterScope scope(std::move(label));
  std::forward<F>(f)();
  return scope.counters();
}

}  // namespace gsa::bg
