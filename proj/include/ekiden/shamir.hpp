#pragma once

#include <cstdint>
#include <vector>

#include "ekiden/group.hpp"
#include "ekiden/rng.hpp"

namespace ekiden::shamir {

struct Share {
  uint32_t index = 0;  // evaluation point, nonzero
  group::Scalar value;
};

struct ShareSet {
  uint32_t threshold = 0;  // polynomial degree k; k+1 shares reconstruct
  std::vector<Share> shares;
};

// Polynomial of degree k with f(0) = secret, evaluated at 1..n.
// Requires 0 < k < n.
ShareSet share(const group::Group& g, const group::Scalar& secret, uint32_t k, uint32_t n, Rng& rng);

// Interpolates f(0) from the given shares. Requires distinct indices; the
// caller supplies at least k+1 shares of the original polynomial (fewer
// shares than that reconstruct garbage, which the threshold check rejects
// when known).
group::Scalar reconstruct(const group::Group& g, const std::vector<Share>& shares);

// Reconstruct with an explicit minimum share count (k+1).
group::Scalar reconstruct_threshold(const group::Group& g, const std::vector<Share>& shares,
                                    uint32_t threshold);

}  // namespace ekiden::shamir
