#include "ekiden/shamir.hpp"

#include <set>

namespace ekiden::shamir {

using group::Group;
using group::Scalar;

namespace {
Scalar eval_poly(const Group& g, const std::vector<Scalar>& coeffs, uint32_t x) {
  // Horner's rule; coeffs[0] is the constant term.
  Scalar sx = g.scalar_from_u64(x);
  Scalar acc = g.scalar_zero();
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = g.scalar_add(g.scalar_mul(acc, sx), *it);
  return acc;
}
}  // namespace

ShareSet share(const Group& g, const Scalar& secret, uint32_t k, uint32_t n, Rng& rng) {
  if (k == 0 || k >= n) fail(Error::Code::bad_argument, "shamir requires 0 < k < n");
  std::vector<Scalar> coeffs;
  coeffs.push_back(secret);
  for (uint32_t i = 0; i < k; i++) coeffs.push_back(g.scalar_random(rng));

  ShareSet out;
  out.threshold = k;
  for (uint32_t x = 1; x <= n; x++) out.shares.push_back({x, eval_poly(g, coeffs, x)});
  return out;
}

Scalar reconstruct(const Group& g, const std::vector<Share>& shares) {
  if (shares.empty()) fail(Error::Code::bad_argument, "no shares to reconstruct from");
  std::vector<uint32_t> indices;
  std::set<uint32_t> seen;
  for (const auto& s : shares) {
    if (!seen.insert(s.index).second) fail(Error::Code::bad_argument, "duplicate share index");
    indices.push_back(s.index);
  }
  auto lambda = group::lagrange_coeffs(g, indices);
  Scalar acc = g.scalar_zero();
  for (const auto& s : shares) acc = g.scalar_add(acc, g.scalar_mul(lambda.at(s.index), s.value));
  return acc;
}

Scalar reconstruct_threshold(const Group& g, const std::vector<Share>& shares, uint32_t threshold) {
  if (shares.size() < size_t(threshold) + 1)
    fail(Error::Code::bad_argument, "need at least k+1 shares to reconstruct");
  return reconstruct(g, shares);
}

}  // namespace ekiden::shamir
