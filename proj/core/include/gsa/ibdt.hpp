#pragma once

// Identity-based dynamic threshold signatures.
//
// Identities are arbitrary strings. The threshold policy (t, S) is chosen at
// signing time; each member of S produces a partial signature and one member
// (the combiner) folds them into a constant-size signature that anyone can
// check against (t, S) with two pairings.
//
// Construction, over a Type-3 group with generators g (G1) and h (G2):
//
//   msk        = (alpha, gamma)
//   pms        = h^{gamma^k} for k = 0..n, dummy identities d_1..d_{n-1} and
//                their keys g^{alpha/(gamma+d_i)}
//   mpk        = v = e(g, h)^alpha
//   SK_id      = g^{alpha/(gamma+x)},  x = H(id)
//
// A policy S with t = |S| is padded with the first n-t dummies into a set T
// of exactly n identities, and P_T(Z) = prod_{x in T} (Z + x). Partial
// fractions give 1/P_T(gamma) = sum_i c_i / (gamma + x_i) with
// c_i = prod_{j != i} (x_j - x_i)^{-1}, so the aggregate key
// K_T = g^{alpha/P_T(gamma)} is a product of per-identity contributions.
//
//   partial_i  = (SK_i^{c_i} * H(m)^{r_i},  X^{r_i}),   X = h^{P_T(gamma)}
//   sigma      = (dummy part * prod partial_i.first, prod partial_i.second)
//   verify     : e(sigma_1, X) == v * e(H(m), sigma_2)
//
// H(m) hashes the message together with the encoded policy, so a partial
// signature is bound to exactly one (message, policy) pair.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsa/bilinear_group.hpp"
#include "gsa/bytes.hpp"
#include "gsa/crypto.hpp"

namespace gsa::ibdt {

using bg::GroupElement;
using bg::Scalar;

inline constexpr std::uint16_t kEncodingVersion = 0x0001;
inline constexpr unsigned kSupportedLambda = 128;
inline constexpr std::size_t kMaxThresholdBound = 1u << 16;

/// Admissible identity strings: a character set and a maximum length.
struct IdentityUniverse {
  std::string alphabet;
  std::size_t max_length = 0;

  static IdentityUniverse decimal_digits(std::size_t max_length = 64);
  /// Digits plus the '.' separator used by the extended pseudonym encoding.
  static IdentityUniverse pseudonyms(std::size_t max_length = 64);

  bool contains(std::string_view id) const;
  bool operator==(const IdentityUniverse&) const = default;
};

struct PublicParams {
  unsigned lambda = kSupportedLambda;
  std::size_t n_max = 0;
  IdentityUniverse universe;
  GroupElement g1 = GroupElement::generator(bg::GroupTag::G1);
  GroupElement g2 = GroupElement::generator(bg::GroupTag::G2);
  std::vector<GroupElement> gamma_powers;  // h^{gamma^k}, k = 0..n_max
  std::vector<Scalar> dummies;             // n_max - 1 dummy identities
  std::vector<GroupElement> dummy_keys;    // g^{alpha/(gamma+d_i)}

  Bytes serialize() const;
  static PublicParams deserialize(ByteView bytes);
};

struct MasterPublicKey {
  GroupElement pairing_value = GroupElement::identity(bg::GroupTag::GT);  // e(g,h)^alpha

  Bytes serialize() const;
  static MasterPublicKey deserialize(ByteView bytes);
};

/// Never leaves the service provider.
struct MasterSecretKey {
  Scalar alpha;
  Scalar gamma;
};

struct MasterKeyPair {
  MasterPublicKey mpk;
  MasterSecretKey msk;
};

struct SetupResult {
  PublicParams pms;
  MasterKeyPair keys;
};

struct IdentitySecretKey {
  std::string identity;
  GroupElement key = GroupElement::identity(bg::GroupTag::G1);

  Bytes serialize() const;
  static IdentitySecretKey deserialize(ByteView bytes);
};

struct ThresholdPolicy {
  std::size_t t = 0;
  std::vector<std::string> members;

  /// t == |members|, the only shape used by the accreditation protocol.
  static ThresholdPolicy all_of(std::vector<std::string> members);

  /// Throws PolicyError unless 1 <= t <= |S| <= n_max, members are pairwise
  /// distinct and inside the universe.
  void validate(const PublicParams& pms) const;
  bool contains(std::string_view id) const;
  Bytes encode() const;
  static ThresholdPolicy decode(ByteView bytes);
  bool operator==(const ThresholdPolicy&) const = default;
};

/// Digest binding a signature to (message, policy).
Digest binding_digest(ByteView msg, const ThresholdPolicy& gamma);

struct PartialSignature {
  std::string signer_identity;
  GroupElement sigma1 = GroupElement::identity(bg::GroupTag::G1);
  GroupElement sigma2 = GroupElement::identity(bg::GroupTag::G2);
  Digest policy_digest{};

  Bytes serialize() const;
  static PartialSignature deserialize(ByteView bytes);
};

/// Serialized size is fixed: two group elements and the binding digest.
struct CombinedSignature {
  GroupElement sigma1 = GroupElement::identity(bg::GroupTag::G1);
  GroupElement sigma2 = GroupElement::identity(bg::GroupTag::G2);
  Digest policy_digest{};

  Bytes serialize() const;
  static CombinedSignature deserialize(ByteView bytes);
  bool operator==(const CombinedSignature& o) const {
    return sigma1 == o.sigma1 && sigma2 == o.sigma2 && policy_digest == o.policy_digest;
  }
};

/// Everything Sign needs that does not depend on the message or the
/// per-signature randomness.
struct SignPrecomputation {
  std::string signer_identity;
  ThresholdPolicy policy;
  Digest policy_id{};  // digest of the policy alone
  GroupElement key_share = GroupElement::identity(bg::GroupTag::G1);       // SK^{c_i}
  GroupElement policy_element = GroupElement::identity(bg::GroupTag::G2);  // X = h^{P_T(gamma)}
};

/// The dummy-identity part of the aggregate key, which depends only on the
/// policy.
struct CombPrecomputation {
  std::string combiner_identity;
  ThresholdPolicy policy;
  Digest policy_id{};
  GroupElement dummy_part = GroupElement::identity(bg::GroupTag::G1);
};

enum class VerifyReason {
  Valid,
  MalformedSignature,
  InvalidPolicy,
  UnsupportedThreshold,
  BindingMismatch,
  PairingCheckFailed,
};

std::string_view reason_name(VerifyReason reason);

struct VerifyResult {
  bool valid = false;
  VerifyReason reason = VerifyReason::PairingCheckFailed;

  explicit operator bool() const noexcept { return valid; }
};

/// Throws ConfigurationError for lambda other than 128, n_max == 0 or
/// n_max > 2^16.
SetupResult setup(unsigned lambda, IdentityUniverse universe, std::size_t n_max, Rng& rng);

/// True iff mpk == e(g, h)^alpha and h^gamma matches msk.
bool master_keys_consistent(const PublicParams& pms, const MasterKeyPair& keys);

/// Throws DomainError for an identity outside the universe.
IdentitySecretKey keygen(const PublicParams& pms, const MasterPublicKey& mpk, const MasterSecretKey& msk,
                         std::string_view id);

/// e(SK, h^gamma * h^x) == mpk.
bool key_is_consistent(const PublicParams& pms, const MasterPublicKey& mpk, const IdentitySecretKey& sk);

PartialSignature sign(const PublicParams& pms, const MasterPublicKey& mpk, const IdentitySecretKey& sk, ByteView msg,
                      const ThresholdPolicy& gamma, Rng& rng);

CombinedSignature comb(const PublicParams& pms, const MasterPublicKey& mpk, const IdentitySecretKey& sk_combiner,
                       ByteView msg, const ThresholdPolicy& gamma, const std::vector<PartialSignature>& partials);

/// Total over its inputs: never throws, reports why a signature is rejected.
VerifyResult verify(const PublicParams& pms, const MasterPublicKey& mpk, ByteView msg, const CombinedSignature& sigma,
                    const ThresholdPolicy& gamma);
VerifyResult verify(const PublicParams& pms, const MasterPublicKey& mpk, ByteView msg, ByteView sigma_bytes,
                    const ThresholdPolicy& gamma);

SignPrecomputation sign_precompute(const PublicParams& pms, const MasterPublicKey& mpk, const IdentitySecretKey& sk,
                                   const ThresholdPolicy& gamma);
PartialSignature fast_sign(const SignPrecomputation& pre, ByteView msg, Rng& rng);
/// As above, but first checks that `pre` was built for `gamma` (BindingError).
PartialSignature fast_sign(const SignPrecomputation& pre, ByteView msg, const ThresholdPolicy& gamma, Rng& rng);

CombPrecomputation comb_precompute(const PublicParams& pms, const MasterPublicKey& mpk,
                                   const IdentitySecretKey& sk_combiner, const ThresholdPolicy& gamma);
CombinedSignature fast_comb(const CombPrecomputation& pre, ByteView msg, const std::vector<PartialSignature>& partials);

}  // namespace gsa::ibdt
