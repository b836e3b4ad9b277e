#pragma once

#include <optional>
#include <vector>

#include "ekiden/node.hpp"

namespace ekiden::client {

// End-user party: holds a signing identity and an encryption keypair, talks
// to compute nodes in priority order, and accepts only attested outputs
// bound to its own input ciphertext.
class Client {
 public:
  Client(uint32_t id, Rng rng, std::vector<node::ComputeNode*> nodes, ledger::Ledger& ledger,
         const crypto::VerifyKey& platform_pk, node::Instrumentation* instr = nullptr);

  uint32_t id() const { return id_; }
  const crypto::VerifyKey& spk() const { return sig_.vk; }
  const records::BoxPk& epk() const { return box_.pk; }

  static constexpr int kMaxAttempts = 8;

  // Creates the contract through a node, then independently verifies the
  // genesis landed on the ledger before accepting the receipt.
  crypto::Digest create_contract(const contracts::ContractCode& code);

  // One protocol attempt in flight.
  struct Attempt {
    crypto::Digest cid;
    Bytes inp_ct;
    crypto::Signature sig;
    size_t node_index = 0;
    // filled by the request leg
    Bytes st_ct;
    Bytes outp_ct;
    records::SigmaBundle sigma;
    bool have_reply = false;
  };

  // Phases, exposed so a scheduler can interleave many clients.
  Attempt begin_attempt(const crypto::Digest& cid, const Bytes& payload);
  // Runs the request leg; verifies h_inp and the attestation before
  // returning. Throws on transport faults (caller retries elsewhere).
  void request_leg(Attempt& a);
  // The claim leg; nullopt = ledger rejected the transition (stale state,
  // start over). On success returns the decrypted, verified output.
  std::optional<Bytes> claim_leg(Attempt& a);

  // Full loop with retry, per the protocol figure. Gives up after
  // kMaxAttempts with Error::retries_exhausted.
  Bytes execute(const crypto::Digest& cid, const Bytes& payload);

  // Raw encrypted ledger view; reveals lengths only.
  std::optional<ledger::LedgerEntry> read_state(const crypto::Digest& cid) const;

  // Batch-mode helpers: sign/encrypt and hand to the node's buffer. The
  // harness later matches committed outputs back by h_inp.
  Attempt submit_to_batch(node::ComputeNode& node, const crypto::Digest& cid, const Bytes& payload);

  // Attach the slice of a batch commit belonging to this attempt; verifies
  // the attestation and input binding like the request leg does.
  void adopt_batch_reply(Attempt& a, const Bytes& st_ct, const Bytes& outp_ct,
                         const records::SigmaBundle& sigma);

  uint64_t outputs_accepted() const { return outputs_accepted_; }

  node::ComputeNode& node_at(size_t index) { return *nodes_.at(index % nodes_.size()); }
  size_t node_count() const { return nodes_.size(); }

 private:
  uint32_t id_;
  Rng rng_;
  crypto::SigKeypair sig_;
  crypto::PkKeypair box_;
  std::vector<node::ComputeNode*> nodes_;
  ledger::Ledger& ledger_;
  crypto::VerifyKey platform_pk_;
  node::Instrumentation* instr_;
  uint64_t seq_ = 0;
  uint64_t outputs_accepted_ = 0;

  struct ContractInfo {
    contracts::ContractCode code;
    records::BoxPk pk_in;
    uint64_t epoch = 0;
  };
  ContractInfo fetch_contract_info(const crypto::Digest& cid) const;
  void verify_reply(const Attempt& a) const;
};

}  // namespace ekiden::client
