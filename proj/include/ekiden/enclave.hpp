#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>

#include "ekiden/contracts.hpp"
#include "ekiden/crypto.hpp"
#include "ekiden/keys.hpp"
#include "ekiden/ledger.hpp"
#include "ekiden/records.hpp"
#include "ekiden/rng.hpp"

namespace ekiden::enclave {

using keys::EnclaveId;
using keys::NodeId;

struct ResumeOutput {
  Bytes outp1;
  crypto::Signature sig_tee;  // sign(sk_TEE, (program_hash, outp1))
  Bytes outp2;                // unattested; bound through digests inside outp1
};

// Software stand-in for attested execution: an enclave registry plus one
// attestation root keypair. Per the IAS-elimination model there is no
// attestation-service round trip; everything chains off this root.
class Platform {
 public:
  struct Config {
    uint64_t checkpoint_interval = 64;  // full-state item every N diffs
  };

  explicit Platform(Rng& rng);
  Platform(Rng& rng, Config config);
  ~Platform();

  struct Enclave;  // registry slot; defined in the implementation

  const crypto::VerifyKey& attestation_pk() const { return att_.vk; }

  // Environment the wrappers run against.
  void set_key_provider(keys::KeyProvider* kp) { key_provider_ = kp; }
  void set_ledger_view(const ledger::LedgerView* lv) { ledger_view_ = lv; }
  void set_host_crashed(std::function<bool(NodeId)> fn) { host_crashed_ = std::move(fn); }

  // Loads the contract wrapper for `code` into a fresh enclave on `host`.
  EnclaveId install(NodeId host, const contracts::ContractCode& code);
  void terminate(EnclaveId eid);

  struct EnclaveInfo {
    NodeId host = 0;
    crypto::Digest program_hash;
    contracts::ContractCode code;
    bool terminated = false;
  };
  std::optional<EnclaveInfo> info(EnclaveId eid) const;

  // Runs the wrapper on the input; the attestation signs (program, outp1)
  // only. Calls are serialized per enclave; distinct enclaves may run
  // concurrently.
  ResumeOutput resume(EnclaveId eid, const records::WrapperInput& input);

  // Adversary / harness hooks.
  void erase_soft_state(EnclaveId eid);  // drops Cache and Batch
  void drop_next_output(EnclaveId eid);  // executes, then swallows the reply

  // Signing-oracle instrumentation: true iff the platform signed exactly
  // this attestation payload during this run.
  bool was_emitted(const Bytes& attest_payload) const;

  uint64_t resume_count() const;

 private:
  crypto::SigKeypair att_;
  std::array<uint8_t, 32> seed_key_;
  Config config_;
  keys::KeyProvider* key_provider_ = nullptr;
  const ledger::LedgerView* ledger_view_ = nullptr;
  std::function<bool(NodeId)> host_crashed_;

  mutable std::mutex mu_;
  std::map<EnclaveId, std::unique_ptr<Enclave>> enclaves_;
  EnclaveId next_eid_ = 1;
  std::set<crypto::Digest> emitted_;
  uint64_t resumes_ = 0;
};

}  // namespace ekiden::enclave
