#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "ekiden/enclave.hpp"
#include "ekiden/group.hpp"
#include "ekiden/keys.hpp"
#include "ekiden/ledger.hpp"
#include "ekiden/shamir.hpp"

namespace ekiden::keymgr {

struct Committee {
  uint32_t n = 5;
  double f = 0.4;  // fraction of members an adversary may breach

  // reconstruction threshold k = ceil(f * N); k+1 shares derive a key
  uint32_t threshold() const;
};

// One committee member: holds a master-key share per contract, evaluates the
// distributed PRF on request, never releases the share itself.
struct Member {
  uint32_t index = 0;  // 1-based evaluation point
  bool online = true;
  std::map<crypto::Digest, group::Scalar> shares;  // cid -> share of k_c
};

struct PrfPiece {
  uint32_t index = 0;
  group::Element value;  // H(cid || t) ^ share_i
};

// Threshold key management committee: dealerless DKG per contract,
// distributed PRF evaluation of per-epoch keys, Lagrange combination in the
// exponent, per-node privacy budgets, and proactive resharing. Budget and
// key-confirmation replica state synchronizes through dedicated ledger
// entries.
class KeyManagerService : public keys::KeyProvider {
 public:
  struct Config {
    Committee committee;
    uint64_t kappa = 64;  // bundle grants per compute node per epoch
    uint64_t delta = 1;   // forward-secrecy window in epochs
  };

  KeyManagerService(const group::Group& g, Config config, keys::EpochClock* epochs,
                    ledger::Ledger* sync_ledger, const enclave::Platform* platform, Rng rng);

  // KeyProvider: the wrapper-facing bundle query. Authenticates the
  // requester (the enclave must run the wrapper of this cid), charges the
  // host's budget, evaluates the PRF across >= k+1 online members.
  keys::EpochKeyBundle contract_keys(keys::EnclaveId requester, const crypto::Digest& cid,
                                     uint64_t epoch) override;
  uint64_t current_epoch() const override;

  // Dealerless additive DKG: every member deals a random degree-k
  // polynomial; member j's share is the sum of the sub-shares addressed to
  // j. The master scalar never exists in one place. Idempotent per cid.
  void dkg_init(const crypto::Digest& cid);

  // Distributed PRF leg on one member: H(cid || t) ^ share. Enforces the
  // requesting node's budget against the shared grant book.
  PrfPiece eval_share(uint32_t member_index, const crypto::Digest& cid, uint64_t epoch,
                      keys::NodeId requester);

  // Interpolation in the exponent over >= k+1 pieces from distinct members.
  group::Element combine_epoch_key(const std::vector<PrfPiece>& pieces) const;

  // Deterministic domain-separated derivation from the epoch group element.
  keys::EpochKeyBundle derive_bundle(const group::Element& k_ct, const crypto::Digest& cid,
                                     uint64_t epoch) const;

  // Rotate the committee without changing any contract's master secret.
  // Needs >= k+1 online members of the old committee; old shares are
  // destroyed.
  void reshare(Committee next, Rng& rng);

  void set_member_online(uint32_t member_index, bool online);
  const Committee& committee() const { return config_.committee; }
  uint64_t kappa() const { return config_.kappa; }

  // Simulation-level introspection for audits and oracle tests: bypasses
  // attestation and budgets. Not part of the protocol surface.
  keys::EpochKeyBundle audit_bundle(const crypto::Digest& cid, uint64_t epoch);
  group::Scalar audit_master_secret(const crypto::Digest& cid);
  std::vector<shamir::Share> audit_shares(const crypto::Digest& cid) const;

 private:
  const group::Group& g_;
  Config config_;
  keys::EpochClock* epochs_;
  ledger::Ledger* sync_ledger_;
  const enclave::Platform* platform_;
  Rng rng_;

  mutable std::mutex mu_;
  std::vector<Member> members_;
  // budget book mirror: (node, budget epoch) -> distinct grant tags
  std::map<std::pair<keys::NodeId, uint64_t>, std::set<crypto::Digest>> grants_;
  // key-confirmation book mirror: (cid, epoch) -> tag
  std::map<std::pair<crypto::Digest, uint64_t>, crypto::Digest> confirm_book_;
  // derived bundles; combination runs once per (cid, epoch)
  std::map<std::pair<crypto::Digest, uint64_t>, keys::EpochKeyBundle> bundle_cache_;

  group::Element prf_base(const crypto::Digest& cid, uint64_t epoch) const;
  void ensure_dkg_locked(const crypto::Digest& cid);
  bool charge_budget_locked(keys::NodeId node, const crypto::Digest& cid, uint64_t epoch);
  void check_window(uint64_t epoch) const;
  keys::EpochKeyBundle combine_and_confirm_locked(const crypto::Digest& cid, uint64_t epoch);
  group::Scalar audit_master_secret_locked(const crypto::Digest& cid);
};

}  // namespace ekiden::keymgr
