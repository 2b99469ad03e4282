#include "gsa/ibdt.hpp"

#include <algorithm>
#include <set>

#include "gsa/errors.hpp"

namespace gsa::ibdt {

using bg::GroupTag;

// ---------------------------------------------------------------- universe

IdentityUniverse IdentityUniverse::decimal_digits(std::size_t max_length) { return {"0123456789", max_length}; }

IdentityUniverse IdentityUniverse::pseudonyms(std::size_t max_length) { return {"0123456789.", max_length}; }

bool IdentityUniverse::contains(std::string_view id) const {
  if (id.empty() || id.size() > max_length) return false;
  return id.find_first_not_of(alphabet) == std::string_view::npos;
}

// ------------------------------------------------------------------ helpers

namespace {

Scalar identity_scalar(std::string_view id) { return Scalar::hash("gsa.ibdt.identity", as_bytes(id)); }

Scalar dummy_scalar(std::size_t index) {
  Writer w;
  w.u64(index);
  return Scalar::hash("gsa.ibdt.dummy", w.bytes());
}

GroupElement message_point(const Digest& binding) { return GroupElement::hash_to_g1("gsa.ibdt.message", binding); }

Digest policy_id(const ThresholdPolicy& gamma) { return sha256("gsa.ibdt.policy", {gamma.encode()}); }

void require_full_threshold(const ThresholdPolicy& gamma) {
  if (gamma.t != gamma.members.size())
    throw PolicyError("only policies with t == |S| are supported (t=" + std::to_string(gamma.t) +
                      ", |S|=" + std::to_string(gamma.members.size()) + ")");
}

/// Members' identity scalars in policy order, followed by the first
/// n_max - t dummies.
std::vector<Scalar> padded_identities(const PublicParams& pms, const ThresholdPolicy& gamma) {
  std::vector<Scalar> xs;
  xs.reserve(pms.n_max);
  for (const auto& id : gamma.members) xs.push_back(identity_scalar(id));
  for (std::size_t k = 0; xs.size() < pms.n_max; ++k) xs.push_back(pms.dummies.at(k));
  std::set<std::array<std::uint8_t, 32>> seen;
  for (const auto& x : xs)
    if (!seen.insert(x.serialize()).second) throw PolicyError("identity hashes collide inside the policy");
  return xs;
}

/// c_i = prod_{j != i} (x_j - x_i)^{-1}: the partial-fraction coefficient of
/// 1/(Z + x_i) in 1/prod_j (Z + x_j).
Scalar fraction_coefficient(const std::vector<Scalar>& xs, std::size_t i) {
  Scalar denom = Scalar::from_u64(1);
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (j != i) denom *= xs[j] - xs[i];
  return denom.inverse();
}

/// Coefficients a_0..a_m of prod_j (Z + x_j), lowest degree first.
std::vector<Scalar> expand_roots(const std::vector<Scalar>& xs) {
  std::vector<Scalar> coeffs{Scalar::from_u64(1)};
  for (const auto& x : xs) {
    std::vector<Scalar> next(coeffs.size() + 1);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      next[k] += coeffs[k] * x;
      next[k + 1] += coeffs[k];
    }
    coeffs = std::move(next);
  }
  return coeffs;
}

/// h^{P_T(gamma)} from the public powers h^{gamma^k}.
GroupElement policy_element(const PublicParams& pms, const std::vector<Scalar>& xs) {
  const auto coeffs = expand_roots(xs);
  GroupElement acc = power(pms.gamma_powers.at(0), coeffs[0]);
  for (std::size_t k = 1; k < coeffs.size(); ++k) acc = combine(acc, power(pms.gamma_powers.at(k), coeffs[k]));
  return acc;
}

std::size_t member_index(const ThresholdPolicy& gamma, std::string_view id) {
  auto it = std::find(gamma.members.begin(), gamma.members.end(), id);
  if (it == gamma.members.end()) throw PolicyError("identity '" + std::string(id) + "' is not in the signing policy");
  return static_cast<std::size_t>(it - gamma.members.begin());
}

GroupElement read_element(Reader& r, GroupTag expected) {
  auto e = GroupElement::deserialize(r.field());
  if (e.tag() != expected) throw ParseError("expected " + std::string(bg::tag_name(expected)) + " element");
  return e;
}

Digest read_digest(Reader& r) {
  auto b = r.field();
  if (b.size() != 32) throw ParseError("digest must be 32 bytes");
  Digest d;
  std::copy(b.begin(), b.end(), d.begin());
  return d;
}

}  // namespace

// ------------------------------------------------------------ serialization

Bytes PublicParams::serialize() const {
  Writer w;
  w.u16(kEncodingVersion);
  w.field_u32(lambda).field_u64(n_max).field(universe.alphabet).field_u64(universe.max_length);
  w.field(g1.serialize()).field(g2.serialize());
  std::vector<Bytes> powers, ds, dkeys;
  for (const auto& p : gamma_powers) powers.push_back(p.serialize());
  for (const auto& d : dummies) {
    auto b = d.serialize();
    ds.emplace_back(b.begin(), b.end());
  }
  for (const auto& k : dummy_keys) dkeys.push_back(k.serialize());
  w.field_list(powers).field_list(ds).field_list(dkeys);
  return std::move(w).take();
}

PublicParams PublicParams::deserialize(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kEncodingVersion);
  PublicParams p;
  p.lambda = r.field_u32();
  p.n_max = r.field_u64();
  p.universe.alphabet = r.field_string();
  p.universe.max_length = r.field_u64();
  p.g1 = read_element(r, GroupTag::G1);
  p.g2 = read_element(r, GroupTag::G2);
  if (p.n_max == 0 || p.n_max > kMaxThresholdBound) throw ParseError("n_max out of range");
  for (const auto& b : r.field_list()) {
    p.gamma_powers.push_back(GroupElement::deserialize(b));
    if (p.gamma_powers.back().tag() != GroupTag::G2) throw ParseError("gamma powers must lie in G2");
  }
  for (const auto& b : r.field_list()) p.dummies.push_back(Scalar::deserialize(b));
  for (const auto& b : r.field_list()) {
    p.dummy_keys.push_back(GroupElement::deserialize(b));
    if (p.dummy_keys.back().tag() != GroupTag::G1) throw ParseError("dummy keys must lie in G1");
  }
  r.expect_end();
  if (p.gamma_powers.size() != p.n_max + 1 || p.dummies.size() != p.n_max - 1 || p.dummy_keys.size() != p.n_max - 1)
    throw ParseError("public parameter vectors do not match n_max");
  for (std::size_t i = 0; i < p.dummies.size(); ++i)
    if (!(p.dummies[i] == dummy_scalar(i + 1))) throw ParseError("dummy identities do not match their derivation");
  return p;
}

Bytes MasterPublicKey::serialize() const {
  Writer w;
  w.u16(kEncodingVersion).field(pairing_value.serialize());
  return std::move(w).take();
}

MasterPublicKey MasterPublicKey::deserialize(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kEncodingVersion);
  MasterPublicKey m;
  m.pairing_value = read_element(r, GroupTag::GT);
  r.expect_end();
  return m;
}

Bytes IdentitySecretKey::serialize() const {
  Writer w;
  w.u16(kEncodingVersion).field(identity).field(key.serialize());
  return std::move(w).take();
}

IdentitySecretKey IdentitySecretKey::deserialize(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kEncodingVersion);
  IdentitySecretKey sk;
  sk.identity = r.field_string();
  sk.key = read_element(r, GroupTag::G1);
  r.expect_end();
  return sk;
}

ThresholdPolicy ThresholdPolicy::all_of(std::vector<std::string> members) {
  ThresholdPolicy p;
  p.t = members.size();
  p.members = std::move(members);
  return p;
}

void ThresholdPolicy::validate(const PublicParams& pms) const {
  if (t < 1 || t > members.size()) throw PolicyError("threshold must satisfy 1 <= t <= |S|");
  if (members.size() > pms.n_max)
    throw PolicyError("policy has " + std::to_string(members.size()) + " members, n_max is " + std::to_string(pms.n_max));
  std::set<std::string_view> seen;
  for (const auto& m : members) {
    if (!pms.universe.contains(m)) throw PolicyError("policy member '" + m + "' is outside the identity universe");
    if (!seen.insert(m).second) throw PolicyError("policy member '" + m + "' appears twice");
  }
}

bool ThresholdPolicy::contains(std::string_view id) const {
  return std::find(members.begin(), members.end(), id) != members.end();
}

Bytes ThresholdPolicy::encode() const {
  Writer w;
  w.u16(kEncodingVersion).field_u32(static_cast<std::uint32_t>(t)).field_strings(members);
  return std::move(w).take();
}

ThresholdPolicy ThresholdPolicy::decode(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kEncodingVersion);
  ThresholdPolicy p;
  p.t = r.field_u32();
  p.members = r.field_strings();
  r.expect_end();
  return p;
}

Digest binding_digest(ByteView msg, const ThresholdPolicy& gamma) {
  return sha256("gsa.ibdt.binding", {msg, gamma.encode()});
}

Bytes PartialSignature::serialize() const {
  Writer w;
  w.u16(kEncodingVersion).field(signer_identity).field(sigma1.serialize()).field(sigma2.serialize()).field(policy_digest);
  return std::move(w).take();
}

PartialSignature PartialSignature::deserialize(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kEncodingVersion);
  PartialSignature p;
  p.signer_identity = r.field_string();
  p.sigma1 = read_element(r, GroupTag::G1);
  p.sigma2 = read_element(r, GroupTag::G2);
  p.policy_digest = read_digest(r);
  r.expect_end();
  return p;
}

Bytes CombinedSignature::serialize() const {
  Writer w;
  w.u16(kEncodingVersion).field(sigma1.serialize()).field(sigma2.serialize()).field(policy_digest);
  return std::move(w).take();
}

CombinedSignature CombinedSignature::deserialize(ByteView bytes) {
  Reader r(bytes);
  r.expect_version(kEncodingVersion);
  CombinedSignature s;
  s.sigma1 = read_element(r, GroupTag::G1);
  s.sigma2 = read_element(r, GroupTag::G2);
  s.policy_digest = read_digest(r);
  r.expect_end();
  return s;
}

std::string_view reason_name(VerifyReason reason) {
  switch (reason) {
    case VerifyReason::Valid: return "valid";
    case VerifyReason::MalformedSignature: return "malformed-signature";
    case VerifyReason::InvalidPolicy: return "invalid-policy";
    case VerifyReason::UnsupportedThreshold: return "unsupported-threshold";
    case VerifyReason::BindingMismatch: return "binding-mismatch";
    case VerifyReason::PairingCheckFailed: return "pairing-check-failed";
  }
  return "unknown";
}

// --------------------------------------------------------------- algorithms

SetupResult setup(unsigned lambda, IdentityUniverse universe, std::size_t n_max, Rng& rng) {
  if (lambda != kSupportedLambda)
    throw ConfigurationError("security parameter " + std::to_string(lambda) + " unsupported; BLS12-381 provides 128");
  if (n_max < 1 || n_max > kMaxThresholdBound) throw ConfigurationError("n_max must lie in [1, 2^16]");
  if (universe.alphabet.empty() || universe.max_length == 0) throw ConfigurationError("empty identity universe");

  SetupResult out;
  auto& pms = out.pms;
  auto& msk = out.keys.msk;
  pms.lambda = lambda;
  pms.n_max = n_max;
  pms.universe = std::move(universe);

  do msk.alpha = Scalar::random(rng);
  while (msk.alpha.is_zero());
  do msk.gamma = Scalar::random(rng);
  while (msk.gamma.is_zero());

  pms.gamma_powers.push_back(pms.g2);
  Scalar exponent = msk.gamma;
  for (std::size_t k = 1; k <= n_max; ++k) {
    pms.gamma_powers.push_back(power(pms.g2, exponent));
    exponent *= msk.gamma;
  }

  out.keys.mpk.pairing_value = power(pairing(pms.g1, pms.g2), msk.alpha);

  for (std::size_t i = 1; i < n_max; ++i) {
    Scalar d = dummy_scalar(i);
    Scalar denom = msk.gamma + d;
    if (denom.is_zero()) throw ConfigurationError("degenerate master secret; rerun setup");
    pms.dummies.push_back(d);
    pms.dummy_keys.push_back(power(pms.g1, msk.alpha * denom.inverse()));
  }
  return out;
}

bool master_keys_consistent(const PublicParams& pms, const MasterKeyPair& keys) {
  if (pms.gamma_powers.size() < 2) return false;
  return power(pairing(pms.g1, pms.g2), keys.msk.alpha) == keys.mpk.pairing_value &&
         power(pms.g2, keys.msk.gamma) == pms.gamma_powers[1];
}

IdentitySecretKey keygen(const PublicParams& pms, const MasterPublicKey&, const MasterSecretKey& msk,
                         std::string_view id) {
  if (!pms.universe.contains(id)) throw DomainError("identity '" + std::string(id) + "' is outside the universe");
  Scalar denom = msk.gamma + identity_scalar(id);
  if (denom.is_zero()) throw DomainError("identity hashes to the master secret");
  return {std::string(id), power(pms.g1, msk.alpha * denom.inverse())};
}

bool key_is_consistent(const PublicParams& pms, const MasterPublicKey& mpk, const IdentitySecretKey& sk) {
  if (!pms.universe.contains(sk.identity) || sk.key.tag() != GroupTag::G1 || pms.gamma_powers.size() < 2) return false;
  const GroupElement shifted = combine(pms.gamma_powers[1], power(pms.g2, identity_scalar(sk.identity)));
  return pairing(sk.key, shifted) == mpk.pairing_value;
}

SignPrecomputation sign_precompute(const PublicParams& pms, const MasterPublicKey&, const IdentitySecretKey& sk,
                                   const ThresholdPolicy& gamma) {
  gamma.validate(pms);
  require_full_threshold(gamma);
  const std::size_t i = member_index(gamma, sk.identity);
  const auto xs = padded_identities(pms, gamma);

  SignPrecomputation pre;
  pre.signer_identity = sk.identity;
  pre.policy = gamma;
  pre.policy_id = policy_id(gamma);
  pre.key_share = power(sk.key, fraction_coefficient(xs, i));
  pre.policy_element = policy_element(pms, xs);
  return pre;
}

PartialSignature fast_sign(const SignPrecomputation& pre, ByteView msg, Rng& rng) {
  PartialSignature out;
  out.signer_identity = pre.signer_identity;
  out.policy_digest = binding_digest(msg, pre.policy);
  const Scalar r = Scalar::random(rng);
  out.sigma1 = combine(pre.key_share, power(message_point(out.policy_digest), r));
  out.sigma2 = power(pre.policy_element, r);
  return out;
}

PartialSignature fast_sign(const SignPrecomputation& pre, ByteView msg, const ThresholdPolicy& gamma, Rng& rng) {
  if (pre.policy_id != policy_id(gamma) || !(pre.policy == gamma))
    throw BindingError("sign precomputation was built for a different policy");
  return fast_sign(pre, msg, rng);
}

PartialSignature sign(const PublicParams& pms, const MasterPublicKey& mpk, const IdentitySecretKey& sk, ByteView msg,
                      const ThresholdPolicy& gamma, Rng& rng) {
  return fast_sign(sign_precompute(pms, mpk, sk, gamma), msg, rng);
}

CombPrecomputation comb_precompute(const PublicParams& pms, const MasterPublicKey&,
                                   const IdentitySecretKey& sk_combiner, const ThresholdPolicy& gamma) {
  gamma.validate(pms);
  require_full_threshold(gamma);
  member_index(gamma, sk_combiner.identity);
  const auto xs = padded_identities(pms, gamma);

  CombPrecomputation pre;
  pre.combiner_identity = sk_combiner.identity;
  pre.policy = gamma;
  pre.policy_id = policy_id(gamma);
  for (std::size_t k = gamma.members.size(); k < xs.size(); ++k) {
    const auto& dummy_key = pms.dummy_keys.at(k - gamma.members.size());
    pre.dummy_part = combine(pre.dummy_part, power(dummy_key, fraction_coefficient(xs, k)));
  }
  return pre;
}

CombinedSignature fast_comb(const CombPrecomputation& pre, ByteView msg, const std::vector<PartialSignature>& partials) {
  const auto& gamma = pre.policy;
  if (pre.policy_id != policy_id(gamma)) throw BindingError("comb precomputation does not match its policy");
  if (partials.size() < gamma.t)
    throw ThresholdError("need " + std::to_string(gamma.t) + " partial signatures, got " + std::to_string(partials.size()));

  const Digest binding = binding_digest(msg, gamma);
  std::vector<std::pair<std::size_t, const PartialSignature*>> ordered;
  std::set<std::string_view> signers;
  for (const auto& p : partials) {
    if (!signers.insert(p.signer_identity).second)
      throw PolicyError("duplicate partial signature from '" + p.signer_identity + "'");
    const std::size_t idx = member_index(gamma, p.signer_identity);
    if (p.policy_digest != binding)
      throw BindingError("partial signature from '" + p.signer_identity + "' is bound to another message or policy");
    ordered.emplace_back(idx, &p);
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  ordered.resize(gamma.t);

  CombinedSignature out;
  out.policy_digest = binding;
  out.sigma1 = pre.dummy_part;
  for (const auto& [idx, p] : ordered) out.sigma1 = combine(out.sigma1, p->sigma1);
  out.sigma2 = ordered.front().second->sigma2;
  for (std::size_t k = 1; k < ordered.size(); ++k) out.sigma2 = combine(out.sigma2, ordered[k].second->sigma2);
  return out;
}

CombinedSignature comb(const PublicParams& pms, const MasterPublicKey& mpk, const IdentitySecretKey& sk_combiner,
                       ByteView msg, const ThresholdPolicy& gamma, const std::vector<PartialSignature>& partials) {
  return fast_comb(comb_precompute(pms, mpk, sk_combiner, gamma), msg, partials);
}

VerifyResult verify(const PublicParams& pms, const MasterPublicKey& mpk, ByteView msg, const CombinedSignature& sigma,
                    const ThresholdPolicy& gamma) {
  try {
    gamma.validate(pms);
  } catch (const Error&) {
    return {false, VerifyReason::InvalidPolicy};
  }
  if (gamma.t != gamma.members.size()) return {false, VerifyReason::UnsupportedThreshold};
  if (sigma.sigma1.tag() != GroupTag::G1 || sigma.sigma2.tag() != GroupTag::G2 ||
      mpk.pairing_value.tag() != GroupTag::GT)
    return {false, VerifyReason::MalformedSignature};

  const Digest binding = binding_digest(msg, gamma);
  if (sigma.policy_digest != binding) return {false, VerifyReason::BindingMismatch};

  try {
    const auto xs = padded_identities(pms, gamma);
    const GroupElement x = policy_element(pms, xs);
    const GroupElement lhs = pairing(sigma.sigma1, x);
    const GroupElement rhs = combine(mpk.pairing_value, pairing(message_point(binding), sigma.sigma2));
    if (lhs == rhs) return {true, VerifyReason::Valid};
    return {false, VerifyReason::PairingCheckFailed};
  } catch (const std::exception&) {
    return {false, VerifyReason::InvalidPolicy};
  }
}

VerifyResult verify(const PublicParams& pms, const MasterPublicKey& mpk, ByteView msg, ByteView sigma_bytes,
                    const ThresholdPolicy& gamma) {
  CombinedSignature sigma;
  try {
    sigma = CombinedSignature::deserialize(sigma_bytes);
  } catch (const std::exception&) {
    return {false, VerifyReason::MalformedSignature};
  }
  return verify(pms, mpk, msg, sigma, gamma);
}

}  // namespace gsa::ibdt
