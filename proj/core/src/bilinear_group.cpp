#include "gsa/bilinear_group.hpp"

#include <cstring>

#include "gsa/errors.hpp"

namespace gsa::bg {

// ---------------------------------------------------------------- counters

namespace {
enum class OpKind { Multiplication, Exponentiation, Pairing };
thread_local CounterScope* innermost_scope = nullptr;
}  // namespace

struct ScopeAccess {
  static void record(OpKind kind) noexcept {
    for (CounterScope* s = innermost_scope; s != nullptr; s = s->parent_) {
      switch (kind) {
        case OpKind::Multiplication: ++s->counters_.multiplications; break;
        case OpKind::Exponentiation: ++s->counters_.exponentiations; break;
        case OpKind::Pairing: ++s->counters_.pairings; break;
      }
    }
  }
};

CounterScope::CounterScope(std::string label) : parent_(innermost_scope) {
  counters_.context_label = std::move(label);
  innermost_scope = this;
}

CounterScope::~CounterScope() { innermost_scope = parent_; }

void CounterScope::reset() noexcept {
  counters_.multiplications = 0;
  counters_.exponentiations = 0;
  counters_.pairings = 0;
}

// ------------------------------------------------------------------ scalar

Scalar::Scalar() { std::memset(&v_, 0, sizeof v_); }

Scalar Scalar::from_u64(std::uint64_t v) {
  const std::uint64_t limbs[4] = {v, 0, 0, 0};
  Scalar s;
  blst_fr_from_uint64(&s.v_, limbs);
  return s;
}

namespace {
Scalar from_wide(ByteView le_bytes) {
  blst_scalar sc;
  blst_scalar_from_le_bytes(&sc, le_bytes.data(), le_bytes.size());
  std::array<std::uint8_t, 32> be;
  blst_bendian_from_scalar(be.data(), &sc);
  return Scalar::deserialize(be);
}
}  // namespace

Scalar Scalar::random(Rng& rng) {
  std::array<std::uint8_t, 64> wide;
  rng.fill(wide);
  return from_wide(wide);
}

Scalar Scalar::hash(std::string_view domain, ByteView data) {
  Digest lo = sha256(domain, {data, as_bytes("lo")});
  Digest hi = sha256(domain, {data, as_bytes("hi")});
  std::array<std::uint8_t, 64> wide;
  std::memcpy(wide.data(), lo.data(), 32);
  std::memcpy(wide.data() + 32, hi.data(), 32);
  return from_wide(wide);
}

Scalar Scalar::deserialize(ByteView bytes) {
  if (bytes.size() != kEncodedSize) throw ParseError("scalar must be 32 bytes");
  blst_scalar sc;
  blst_scalar_from_bendian(&sc, bytes.data());
  if (!blst_scalar_fr_check(&sc)) throw ParseError("scalar not reduced modulo the group order");
  Scalar s;
  blst_fr_from_scalar(&s.v_, &sc);
  return s;
}

std::array<std::uint8_t, Scalar::kEncodedSize> Scalar::serialize() const {
  blst_scalar sc;
  blst_scalar_from_fr(&sc, &v_);
  std::array<std::uint8_t, kEncodedSize> out;
  blst_bendian_from_scalar(out.data(), &sc);
  return out;
}

blst_scalar Scalar::to_blst() const {
  blst_scalar sc;
  blst_scalar_from_fr(&sc, &v_);
  return sc;
}

bool Scalar::is_zero() const {
  static const Scalar zero;
  return *this == zero;
}

Scalar Scalar::inverse() const {
  if (is_zero()) throw ContractViolation("inverse of zero scalar");
  Scalar r;
  blst_fr_inverse(&r.v_, &v_);
  return r;
}

Scalar Scalar::operator+(const Scalar& o) const {
  Scalar r;
  blst_fr_add(&r.v_, &v_, &o.v_);
  return r;
}

Scalar Scalar::operator-(const Scalar& o) const {
  Scalar r;
  blst_fr_sub(&r.v_, &v_, &o.v_);
  return r;
}

Scalar Scalar::operator*(const Scalar& o) const {
  Scalar r;
  blst_fr_mul(&r.v_, &v_, &o.v_);
  return r;
}

Scalar Scalar::operator-() const {
  Scalar r;
  blst_fr_cneg(&r.v_, &v_, true);
  return r;
}

bool Scalar::operator==(const Scalar& o) const { return std::memcmp(&v_, &o.v_, sizeof v_) == 0; }

// ----------------------------------------------------------- group element

std::string_view tag_name(GroupTag tag) {
  switch (tag) {
    case GroupTag::G1: return "G1";
    case GroupTag::G2: return "G2";
    case GroupTag::GT: return "GT";
  }
  return "?";
}

namespace {

constexpr char kHashToG1Suite[] = "BLS12381G1_XMD:SHA-256_SSWU_RO_";

blst_fp12 gt_one() { return *blst_fp12_one(); }

blst_fp12 gt_pairing(const blst_p1& p, const blst_p2& q) {
  if (blst_p1_is_inf(&p) || blst_p2_is_inf(&q)) return gt_one();
  blst_p1_affine pa;
  blst_p2_affine qa;
  blst_p1_to_affine(&pa, &p);
  blst_p2_to_affine(&qa, &q);
  blst_fp12 f, out;
  blst_miller_loop(&f, &qa, &pa);
  blst_final_exp(&out, &f);
  return out;
}

// The fp12 tower as a flat array of 12 base-field coefficients.
const blst_fp* fp12_coeffs(const blst_fp12& x) { return &x.fp6[0].fp2[0].fp[0]; }
blst_fp* fp12_coeffs(blst_fp12& x) { return &x.fp6[0].fp2[0].fp[0]; }
static_assert(sizeof(blst_fp12) == 12 * sizeof(blst_fp));

}  // namespace

GroupElement GroupElement::generator(GroupTag tag) {
  switch (tag) {
    case GroupTag::G1: return GroupElement(Value{std::in_place_index<0>, *blst_p1_generator()});
    case GroupTag::G2: return GroupElement(Value{std::in_place_index<1>, *blst_p2_generator()});
    case GroupTag::GT:
      return GroupElement(Value{std::in_place_index<2>, gt_pairing(*blst_p1_generator(), *blst_p2_generator())});
  }
  throw ContractViolation("unknown group tag");
}

GroupElement GroupElement::identity(GroupTag tag) {
  switch (tag) {
    case GroupTag::G1: {
      blst_p1 p;
      std::memset(&p, 0, sizeof p);
      return GroupElement(Value{std::in_place_index<0>, p});
    }
    case GroupTag::G2: {
      blst_p2 p;
      std::memset(&p, 0, sizeof p);
      return GroupElement(Value{std::in_place_index<1>, p});
    }
    case GroupTag::GT: return GroupElement(Value{std::in_place_index<2>, gt_one()});
  }
  throw ContractViolation("unknown group tag");
}

GroupElement GroupElement::hash_to_g1(std::string_view domain, ByteView data) {
  Digest msg = sha256(domain, {data});
  blst_p1 p;
  blst_hash_to_g1(&p, msg.data(), msg.size(), reinterpret_cast<const std::uint8_t*>(kHashToG1Suite),
                  sizeof(kHashToG1Suite) - 1, nullptr, 0);
  return GroupElement(Value{std::in_place_index<0>, p});
}

std::size_t GroupElement::encoded_size(GroupTag tag) {
  switch (tag) {
    case GroupTag::G1: return kG1Size;
    case GroupTag::G2: return kG2Size;
    case GroupTag::GT: return kGTSize;
  }
  return 0;
}

Bytes GroupElement::serialize() const {
  Bytes out(encoded_size(tag()));
  out[0] = static_cast<std::uint8_t>(tag());
  switch (value_.index()) {
    case 0: blst_p1_compress(out.data() + 1, &std::get<0>(value_)); break;
    case 1: blst_p2_compress(out.data() + 1, &std::get<1>(value_)); break;
    case 2: {
      const blst_fp* c = fp12_coeffs(std::get<2>(value_));
      for (int i = 0; i < 12; ++i) blst_bendian_from_fp(out.data() + 1 + 48 * i, &c[i]);
      break;
    }
  }
  return out;
}

GroupElement GroupElement::deserialize(ByteView bytes) {
  if (bytes.empty()) throw ParseError("empty group element encoding");
  const std::uint8_t tag = bytes[0];
  if (tag < 0x01 || tag > 0x03) throw ParseError("unknown group tag");
  const auto gtag = static_cast<GroupTag>(tag);
  if (bytes.size() != encoded_size(gtag)) throw ParseError("wrong length for " + std::string(tag_name(gtag)) + " element");
  auto body = bytes.subspan(1);

  GroupElement out = identity(gtag);
  switch (gtag) {
    case GroupTag::G1: {
      blst_p1_affine a;
      if (blst_p1_uncompress(&a, body.data()) != BLST_SUCCESS) throw ParseError("invalid G1 encoding");
      if (!blst_p1_affine_in_g1(&a)) throw ParseError("G1 point outside the prime-order subgroup");
      blst_p1_from_affine(&std::get<0>(out.value_), &a);
      break;
    }
    case GroupTag::G2: {
      blst_p2_affine a;
      if (blst_p2_uncompress(&a, body.data()) != BLST_SUCCESS) throw ParseError("invalid G2 encoding");
      if (!blst_p2_affine_in_g2(&a)) throw ParseError("G2 point outside the prime-order subgroup");
      blst_p2_from_affine(&std::get<1>(out.value_), &a);
      break;
    }
    case GroupTag::GT: {
      blst_fp* c = fp12_coeffs(std::get<2>(out.value_));
      for (int i = 0; i < 12; ++i) blst_fp_from_bendian(&c[i], body.data() + 48 * i);
      if (!std::equal(bytes.begin(), bytes.end(), out.serialize().begin()))
        throw ParseError("non-canonical GT encoding");
      if (!blst_fp12_in_group(&std::get<2>(out.value_))) throw ParseError("GT element outside the prime-order subgroup");
      break;
    }
  }
  // Canonical form: re-encoding must reproduce the input exactly.
  if (gtag != GroupTag::GT && !std::equal(bytes.begin(), bytes.end(), out.serialize().begin()))
    throw ParseError("non-canonical point encoding");
  return out;
}

bool GroupElement::is_identity() const {
  switch (value_.index()) {
    case 0: return blst_p1_is_inf(&std::get<0>(value_));
    case 1: return blst_p2_is_inf(&std::get<1>(value_));
    default: return blst_fp12_is_one(&std::get<2>(value_));
  }
}

GroupElement GroupElement::inverse() const {
  GroupElement r = *this;
  switch (r.value_.index()) {
    case 0: blst_p1_cneg(&std::get<0>(r.value_), true); break;
    case 1: blst_p2_cneg(&std::get<1>(r.value_), true); break;
    default: blst_fp12_conjugate(&std::get<2>(r.value_)); break;
  }
  return r;
}

bool GroupElement::operator==(const GroupElement& o) const {
  if (value_.index() != o.value_.index()) return false;
  switch (value_.index()) {
    case 0: return blst_p1_is_equal(&std::get<0>(value_), &std::get<0>(o.value_));
    case 1: return blst_p2_is_equal(&std::get<1>(value_), &std::get<1>(o.value_));
    default: return blst_fp12_is_equal(&std::get<2>(value_), &std::get<2>(o.value_));
  }
}

// --------------------------------------------------------------- counted ops

GroupElement combine(const GroupElement& a, const GroupElement& b) {
  if (a.tag() != b.tag())
    throw ContractViolation("combine: mismatched groups " + std::string(tag_name(a.tag())) + " and " +
                            std::string(tag_name(b.tag())));
  ScopeAccess::record(OpKind::Multiplication);
  GroupElement r = a;
  switch (a.value_.index()) {
    case 0:
      blst_p1_add_or_double(&std::get<0>(r.value_), &std::get<0>(a.value_), &std::get<0>(b.value_));
      break;
    case 1:
      blst_p2_add_or_double(&std::get<1>(r.value_), &std::get<1>(a.value_), &std::get<1>(b.value_));
      break;
    default: blst_fp12_mul(&std::get<2>(r.value_), &std::get<2>(a.value_), &std::get<2>(b.value_)); break;
  }
  return r;
}

GroupElement power(const GroupElement& a, const Scalar& k) {
  ScopeAccess::record(OpKind::Exponentiation);
  const blst_scalar sc = k.to_blst();
  GroupElement r = a;
  switch (a.value_.index()) {
    case 0: blst_p1_mult(&std::get<0>(r.value_), &std::get<0>(a.value_), sc.b, 255); break;
    case 1: blst_p2_mult(&std::get<1>(r.value_), &std::get<1>(a.value_), sc.b, 255); break;
    default: {
      // Left-to-right square-and-multiply; GT lies in the cyclotomic subgroup.
      const blst_fp12& base = std::get<2>(a.value_);
      blst_fp12 acc = gt_one();
      for (int bit = 254; bit >= 0; --bit) {
        blst_fp12_cyclotomic_sqr(&acc, &acc);
        if ((sc.b[bit / 8] >> (bit % 8)) & 1) blst_fp12_mul(&acc, &acc, &base);
      }
      std::get<2>(r.value_) = acc;
      break;
    }
  }
  return r;
}

GroupElement pairing(const GroupElement& p, const GroupElement& q) {
  if (p.tag() != GroupTag::G1 || q.tag() != GroupTag::G2)
    throw ContractViolation("pairing expects (G1, G2), got (" + std::string(tag_name(p.tag())) + ", " +
                            std::string(tag_name(q.tag())) + ")");
  ScopeAccess::record(OpKind::Pairing);
  return GroupElement(GroupElement::Value{std::in_place_index<2>, gt_pairing(std::get<0>(p.value_), std::get<1>(q.value_))});
}

}  // namespace gsa::bg
