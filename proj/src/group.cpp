#include "ekiden/group.hpp"

#include <sodium.h>

#include <cstring>
#include <set>

namespace ekiden::group {

namespace {

// ---------------------------------------------------------------------------
// Order-11 subgroup of Z_23*, generator 2. The subgroup is exactly the set of
// quadratic residues mod 23.

constexpr uint32_t kTinyP = 23;
constexpr uint32_t kTinyQ = 11;
constexpr uint32_t kTinyG = 2;

uint32_t tiny_pow(uint32_t base, uint32_t e) {
  uint32_t r = 1;
  base %= kTinyP;
  while (e > 0) {
    if (e & 1) r = r * base % kTinyP;
    base = base * base % kTinyP;
    e >>= 1;
  }
  return r;
}

class TinyGroup final : public Group {
 public:
  Element generator() const override { return elem(kTinyG); }
  Element identity() const override { return elem(1); }

  Element mul(const Element& a, const Element& b) const override {
    return elem(val(a) * val(b) % kTinyP);
  }

  Element exp(const Element& base, const Scalar& e) const override {
    return elem(tiny_pow(val(base), sval(e)));
  }

  Element hash_to_group(ByteView data) const override {
    crypto::Digest d = crypto::sha256(data);
    uint32_t r = 0;
    for (int i = 0; i < 4; i++) r = (r << 8) | d.v[i];
    r = r % (kTinyP - 1) + 1;  // 1..22
    return elem(r * r % kTinyP);  // squares form the order-11 subgroup
  }

  bool valid_element(const Element& e) const override {
    if (e.b.size() != 1) return false;
    uint32_t v = e.b[0];
    return v > 0 && v < kTinyP && tiny_pow(v, kTinyQ) == 1;
  }

  Scalar scalar_zero() const override { return scal(0); }
  Scalar scalar_one() const override { return scal(1); }
  Scalar scalar_from_u64(uint64_t v) const override { return scal(static_cast<uint32_t>(v % kTinyQ)); }
  Scalar scalar_add(const Scalar& a, const Scalar& b) const override { return scal((sval(a) + sval(b)) % kTinyQ); }
  Scalar scalar_sub(const Scalar& a, const Scalar& b) const override { return scal((sval(a) + kTinyQ - sval(b)) % kTinyQ); }
  Scalar scalar_mul(const Scalar& a, const Scalar& b) const override { return scal(sval(a) * sval(b) % kTinyQ); }
  Scalar scalar_neg(const Scalar& a) const override { return scal((kTinyQ - sval(a)) % kTinyQ); }

  Scalar scalar_invert(const Scalar& a) const override {
    uint32_t v = sval(a);
    if (v == 0) fail(Error::Code::bad_argument, "scalar zero has no inverse");
    return scal(tiny_pow_q(v, kTinyQ - 2));
  }

  Scalar scalar_random(Rng& rng) const override { return scal(static_cast<uint32_t>(rng.uniform(kTinyQ))); }

  const char* name() const override { return "tiny-23/11"; }

 private:
  static Element elem(uint32_t v) { return Element{Bytes{static_cast<uint8_t>(v)}}; }
  static Scalar scal(uint32_t v) { return Scalar{Bytes{static_cast<uint8_t>(v)}}; }

  static uint32_t val(const Element& e) {
    if (e.b.size() != 1 || e.b[0] == 0 || e.b[0] >= kTinyP)
      fail(Error::Code::bad_argument, "bad tiny group element");
    return e.b[0];
  }

  static uint32_t sval(const Scalar& s) {
    if (s.b.size() != 1 || s.b[0] >= kTinyQ) fail(Error::Code::bad_argument, "bad tiny group scalar");
    return s.b[0];
  }

  static uint32_t tiny_pow_q(uint32_t base, uint32_t e) {
    uint32_t r = 1;
    base %= kTinyQ;
    while (e > 0) {
      if (e & 1) r = r * base % kTinyQ;
      base = base * base % kTinyQ;
      e >>= 1;
    }
    return r;
  }
};

// ---------------------------------------------------------------------------

class RistrettoGroup final : public Group {
 public:
  Element generator() const override {
    Scalar one = scalar_one();
    Element e{Bytes(crypto_core_ristretto255_BYTES)};
    crypto_scalarmult_ristretto255_base(e.b.data(), one.b.data());
    return e;
  }

  Element identity() const override {
    // Encoded identity is all zeros.
    return Element{Bytes(crypto_core_ristretto255_BYTES, 0)};
  }

  Element mul(const Element& a, const Element& b) const override {
    check_elem(a);
    check_elem(b);
    Element out{Bytes(crypto_core_ristretto255_BYTES)};
    if (crypto_core_ristretto255_add(out.b.data(), a.b.data(), b.b.data()) != 0)
      fail(Error::Code::bad_argument, "ristretto addition failed");
    return out;
  }

  Element exp(const Element& base, const Scalar& e) const override {
    check_elem(base);
    check_scalar(e);
    Element out{Bytes(crypto_core_ristretto255_BYTES)};
    // scalarmult rejects the identity result; handle zero exponent and
    // identity base explicitly.
    if (is_zero_scalar(e) || base == identity()) return identity();
    if (crypto_scalarmult_ristretto255(out.b.data(), e.b.data(), base.b.data()) != 0)
      fail(Error::Code::bad_argument, "ristretto scalarmult failed");
    return out;
  }

  Element hash_to_group(ByteView data) const override {
    uint8_t h[crypto_hash_sha512_BYTES];
    crypto_hash_sha512(h, data.data(), data.size());
    Element out{Bytes(crypto_core_ristretto255_BYTES)};
    crypto_core_ristretto255_from_hash(out.b.data(), h);
    return out;
  }

  bool valid_element(const Element& e) const override {
    return e.b.size() == crypto_core_ristretto255_BYTES &&
           (e == identity() || crypto_core_ristretto255_is_valid_point(e.b.data()) == 1);
  }

  Scalar scalar_zero() const override { return Scalar{Bytes(crypto_core_ristretto255_SCALARBYTES, 0)}; }

  Scalar scalar_one() const override {
    Scalar s = scalar_zero();
    s.b[0] = 1;
    return s;
  }

  Scalar scalar_from_u64(uint64_t v) const override {
    Scalar s = scalar_zero();
    for (int i = 0; i < 8; i++) s.b[i] = static_cast<uint8_t>(v >> (8 * i));
    return s;
  }

  Scalar scalar_add(const Scalar& a, const Scalar& b) const override {
    check_scalar(a);
    check_scalar(b);
    Scalar out = scalar_zero();
    crypto_core_ristretto255_scalar_add(out.b.data(), a.b.data(), b.b.data());
    return out;
  }

  Scalar scalar_sub(const Scalar& a, const Scalar& b) const override {
    check_scalar(a);
    check_scalar(b);
    Scalar out = scalar_zero();
    crypto_core_ristretto255_scalar_sub(out.b.data(), a.b.data(), b.b.data());
    return out;
  }

  Scalar scalar_mul(const Scalar& a, const Scalar& b) const override {
    check_scalar(a);
    check_scalar(b);
    Scalar out = scalar_zero();
    crypto_core_ristretto255_scalar_mul(out.b.data(), a.b.data(), b.b.data());
    return out;
  }

  Scalar scalar_neg(const Scalar& a) const override {
    check_scalar(a);
    Scalar out = scalar_zero();
    crypto_core_ristretto255_scalar_negate(out.b.data(), a.b.data());
    return out;
  }

  Scalar scalar_invert(const Scalar& a) const override {
    check_scalar(a);
    if (is_zero_scalar(a)) fail(Error::Code::bad_argument, "scalar zero has no inverse");
    Scalar out = scalar_zero();
    crypto_core_ristretto255_scalar_invert(out.b.data(), a.b.data());
    return out;
  }

  Scalar scalar_random(Rng& rng) const override {
    uint8_t wide[64];
    rng.fill(wide, sizeof wide);
    Scalar out = scalar_zero();
    crypto_core_ristretto255_scalar_reduce(out.b.data(), wide);
    return out;
  }

  const char* name() const override { return "ristretto255"; }

 private:
  static bool is_zero_scalar(const Scalar& s) {
    for (uint8_t b : s.b)
      if (b != 0) return false;
    return true;
  }

  static void check_elem(const Element& e) {
    if (e.b.size() != crypto_core_ristretto255_BYTES)
      fail(Error::Code::bad_argument, "bad ristretto element width");
  }

  static void check_scalar(const Scalar& s) {
    if (s.b.size() != crypto_core_ristretto255_SCALARBYTES)
      fail(Error::Code::bad_argument, "bad ristretto scalar width");
  }
};

}  // namespace

std::unique_ptr<Group> make_tiny_group() { return std::make_unique<TinyGroup>(); }
std::unique_ptr<Group> make_ristretto_group() { return std::make_unique<RistrettoGroup>(); }

std::map<uint32_t, Scalar> lagrange_coeffs(const Group& g, const std::vector<uint32_t>& indices) {
  if (indices.empty()) fail(Error::Code::bad_argument, "lagrange over empty index set");
  std::set<uint32_t> seen;
  for (uint32_t i : indices) {
    if (i == 0) fail(Error::Code::bad_argument, "lagrange index must be nonzero");
    if (!seen.insert(i).second) fail(Error::Code::bad_argument, "duplicate lagrange index");
  }

  std::map<uint32_t, Scalar> out;
  for (uint32_t i : indices) {
    Scalar num = g.scalar_one();
    Scalar den = g.scalar_one();
    Scalar si = g.scalar_from_u64(i);
    for (uint32_t j : indices) {
      if (j == i) continue;
      Scalar sj = g.scalar_from_u64(j);
      num = g.scalar_mul(num, g.scalar_neg(sj));
      den = g.scalar_mul(den, g.scalar_sub(si, sj));
    }
    out.emplace(i, g.scalar_mul(num, g.scalar_invert(den)));
  }
  return out;
}

}  // namespace ekiden::group
