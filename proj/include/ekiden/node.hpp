#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "ekiden/enclave.hpp"
#include "ekiden/ledger.hpp"
#include "ekiden/records.hpp"

namespace ekiden::node {

using keys::EnclaveId;
using keys::NodeId;

// Interposition surface for the harness: every protocol message crossing a
// trust boundary announces itself here. Returning false drops the message
// (the caller observes a timeout). The default instance passes everything.
class Instrumentation {
 public:
  virtual ~Instrumentation() = default;

  struct Ctx {
    NodeId node = 0;
    EnclaveId eid = 0;
    const crypto::Digest* cid = nullptr;
  };

  virtual bool boundary(std::string_view step, const Ctx& ctx) {
    (void)step;
    (void)ctx;
    return true;
  }
  virtual void message(std::string_view step, const Ctx& ctx, ByteView payload) {
    (void)step;
    (void)ctx;
    (void)payload;
  }
  virtual void output_released(const crypto::Digest& cid, const crypto::Digest& h_outp,
                               bool read_only) {
    (void)cid;
    (void)h_outp;
    (void)read_only;
  }
};

Instrumentation& null_instrumentation();

struct NodeConfig {
  bool wal_mode = false;   // commit encrypted diffs instead of full states
  uint64_t batch_size = 1; // submits buffered per commit in wal mode
};

// Compute node: hosts contract enclaves, shuttles protocol messages between
// clients, enclaves and the ledger. Holds no authoritative state; a crashed
// node can be replaced by any other.
class ComputeNode {
 public:
  ComputeNode(NodeId id, enclave::Platform& platform, ledger::Ledger& ledger,
              Instrumentation* instr, NodeConfig config = {});

  NodeId id() const { return id_; }
  const NodeConfig& config() const { return config_; }
  bool crashed() const { return crashed_; }
  void crash();    // kills the node and terminates its enclaves
  void restart();  // clears the crashed flag; enclaves stay dead

  // Contract creation: install the wrapper, run create, write the genesis.
  crypto::Digest create(const contracts::ContractCode& code);

  struct RequestResult {
    Bytes st_ct;  // new full state or diff; empty for read-only results
    Bytes outp_ct;
    records::SigmaBundle sigma;
  };

  // One request end to end except the ledger write: the enclave executes on
  // the latest state and returns the bound atom-deliver pieces.
  RequestResult request(const crypto::Digest& cid, const Bytes& inp_ct,
                        const crypto::VerifyKey& spk, const crypto::Signature& sig);

  // The write leg of atomic delivery: put (st_ct, sigma) on the ledger (or
  // confirm it is already there), then have an enclave release the output
  // re-encrypted under epk. nullopt = ledger reject; the caller retries.
  std::optional<Bytes> claim_output(const crypto::Digest& cid, const Bytes& st_ct,
                                    const Bytes& outp_ct, const records::SigmaBundle& sigma,
                                    const records::BoxPk& epk);

  // Extended protocol: buffer a request for the next batch commit.
  void submit_to_batch(const crypto::Digest& cid, const Bytes& inp_ct,
                       const crypto::VerifyKey& spk, const crypto::Signature& sig);
  uint64_t buffered(const crypto::Digest& cid) const;

  struct BatchResult {
    Bytes st_ct;
    records::SigmaBundle sigma;
    std::vector<Bytes> outp_cts;       // aligned with submission order
    std::vector<crypto::Digest> h_inp; // aligned with outp_cts
  };

  // Commit every buffered request as one transition. Empty buffer is a
  // no-op (nullopt). On a stale enclave cache the node rebuilds it from the
  // on-chain log and retries once.
  std::optional<BatchResult> commit_batch(const crypto::Digest& cid);

  struct WalView {
    std::vector<Bytes> items;  // checkpoint first, then diffs, oldest first
    uint64_t checkpoint_index = 0;
    uint64_t diff_count = 0;
  };

  // Checkpoint + diffs whose replay is the contract's latest logical state.
  // Verifies the hash chain; a broken link names the offending index.
  WalView reconstruct_state(const crypto::Digest& cid) const;

  EnclaveId ensure_enclave(const crypto::Digest& cid);

 private:
  NodeId id_;
  enclave::Platform& platform_;
  ledger::Ledger& ledger_;
  Instrumentation* instr_;
  NodeConfig config_;
  bool crashed_ = false;
  std::map<crypto::Digest, EnclaveId> hosted_;

  struct PendingSubmit {
    Bytes inp_ct;
    crypto::VerifyKey spk;
    crypto::Signature sig;
  };
  std::map<crypto::Digest, std::vector<PendingSubmit>> pending_;

  void check_alive() const;
  bool cross(std::string_view step, const crypto::Digest* cid, EnclaveId eid = 0);
  Bytes latest_state_ct(const crypto::Digest& cid) const;
  std::optional<BatchResult> drive_commit(const crypto::Digest& cid, EnclaveId eid, bool with_wal);
};

}  // namespace ekiden::node
