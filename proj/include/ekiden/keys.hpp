#pragma once

#include <cstdint>

#include "ekiden/crypto.hpp"

namespace ekiden::keys {

using EnclaveId = uint64_t;
using NodeId = uint32_t;

// Per-(contract, epoch) short-term key material, derived deterministically
// from the epoch group element so any threshold evaluation yields the same
// bundle. The confirmation tag detects combinations over corrupted or
// mixed-epoch pieces.
struct EpochKeyBundle {
  uint64_t epoch = 0;
  crypto::SymKey k_state;
  crypto::SymKey k_out;
  crypto::PkKeypair in_kp;
  crypto::Digest confirm_tag;
};

// Logical epoch counter, advanced by the harness.
struct EpochClock {
  uint64_t current = 0;
};

// Access point the contract wrapper uses; stands in for attested TLS to the
// key-manager committee.
class KeyProvider {
 public:
  virtual ~KeyProvider() = default;

  // Authenticates the requesting enclave, enforces the per-node privacy
  // budget and the forward-secrecy window, then derives the bundle.
  // Throws Error::budget_exhausted / stale_epoch / crypto_auth.
  virtual EpochKeyBundle contract_keys(EnclaveId requester, const crypto::Digest& cid,
                                       uint64_t epoch) = 0;

  virtual uint64_t current_epoch() const = 0;
};

}  // namespace ekiden::keys
