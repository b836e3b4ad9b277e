#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "ekiden/bytes.hpp"
#include "ekiden/crypto.hpp"
#include "ekiden/rng.hpp"

namespace ekiden::group {

// Opaque encodings; interpretation belongs to the Group that produced them.
struct Scalar {
  Bytes b;
  bool operator==(const Scalar&) const = default;
};

struct Element {
  Bytes b;
  bool operator==(const Element&) const = default;
};

// Prime-order group with generator g and scalar field Z_q. Two
// instantiations live behind this interface: ristretto255 for protocol use
// and a brute-forceable order-11 subgroup of Z_23* for oracle tests.
class Group {
 public:
  virtual ~Group() = default;

  virtual Element generator() const = 0;
  virtual Element identity() const = 0;
  virtual Element mul(const Element& a, const Element& b) const = 0;
  virtual Element exp(const Element& base, const Scalar& e) const = 0;
  virtual Element hash_to_group(ByteView data) const = 0;
  virtual bool valid_element(const Element& e) const = 0;

  virtual Scalar scalar_zero() const = 0;
  virtual Scalar scalar_one() const = 0;
  virtual Scalar scalar_from_u64(uint64_t v) const = 0;
  virtual Scalar scalar_add(const Scalar& a, const Scalar& b) const = 0;
  virtual Scalar scalar_sub(const Scalar& a, const Scalar& b) const = 0;
  virtual Scalar scalar_mul(const Scalar& a, const Scalar& b) const = 0;
  virtual Scalar scalar_neg(const Scalar& a) const = 0;
  virtual Scalar scalar_invert(const Scalar& a) const = 0;  // a != 0
  virtual Scalar scalar_random(Rng& rng) const = 0;

  virtual const char* name() const = 0;
};

// Subgroup of order 11 in Z_23*, generator 2. Elements and scalars encode as
// single bytes; small enough to verify every identity exhaustively.
std::unique_ptr<Group> make_tiny_group();

// ristretto255; >=128-bit security.
std::unique_ptr<Group> make_ristretto_group();

// lambda_i = prod_{j != i} -j / (i - j) mod q, so that
// sum lambda_i f(i) = f(0) for every polynomial of degree < |indices|.
// Indices must be distinct and nonzero; the empty set is an error.
std::map<uint32_t, Scalar> lagrange_coeffs(const Group& g, const std::vector<uint32_t>& indices);

}  // namespace ekiden::group
