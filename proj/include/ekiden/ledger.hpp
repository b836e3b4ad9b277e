#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ekiden/bytes.hpp"
#include "ekiden/crypto.hpp"
#include "ekiden/records.hpp"

namespace ekiden::ledger {

using EntryId = crypto::Digest;

struct LedgerItem {
  Bytes payload;
  std::string writer;  // stored per the functionality, unused by succ
};

struct LedgerEntry {
  EntryId id;
  std::vector<LedgerItem> items;
};

enum class WriteStatus { receipt, reject };

// succ(entry, candidate): acceptance rule for appending candidate to entry.
// entry is nullptr when the id has no storage yet. Must be pure.
using SuccFn = std::function<bool(const EntryId&, const LedgerEntry*, const Bytes&)>;

// Read-only view handed to enclaves for membership queries.
class LedgerView {
 public:
  virtual ~LedgerView() = default;
  virtual std::optional<LedgerEntry> read(const EntryId& id) const = 0;
  virtual bool contains(const EntryId& id, const Bytes& payload) const = 0;
  // True iff some item of the entry has the given state-ciphertext hash.
  virtual bool state_hash_on_chain(const EntryId& id, const crypto::Digest& h) const = 0;
};

// Append-only log with an atomic check-then-append write path. Concurrent
// writers race fairly in arrival order; this is the trusted-quorum backend.
class Ledger : public LedgerView {
 public:
  explicit Ledger(SuccFn succ);

  WriteStatus write(const EntryId& id, Bytes payload, std::string writer);
  std::optional<LedgerEntry> read(const EntryId& id) const override;
  bool contains(const EntryId& id, const Bytes& payload) const override;
  bool state_hash_on_chain(const EntryId& id, const crypto::Digest& h) const override;

  // Point reads, so hot paths avoid copying whole entries.
  uint64_t item_count(const EntryId& id) const;
  std::optional<Bytes> item_at(const EntryId& id, uint64_t index) const;
  std::optional<Bytes> latest_item(const EntryId& id) const;

  std::vector<EntryId> entry_ids() const;

  // Newline-delimited hex records of (id, index, writer, payload);
  // deterministic across runs.
  void dump(std::ostream& out) const;
  void restore(std::istream& in);

  // Accounting for the harness metrics.
  uint64_t accepted_writes() const;
  uint64_t rejected_writes() const;
  uint64_t entry_bytes(const EntryId& id) const;
  uint64_t read_count() const;

 protected:
  virtual void on_accepted(const EntryId& id, const Bytes& payload);

 private:
  SuccFn succ_;
  mutable std::mutex mu_;
  std::map<EntryId, LedgerEntry> storage_;
  struct EntryIndex {
    std::set<crypto::Digest> payload_hashes;
    std::set<crypto::Digest> state_hashes;
  };
  std::map<EntryId, EntryIndex> index_;
  uint64_t accepted_ = 0;
  uint64_t rejected_ = 0;
  mutable uint64_t reads_ = 0;

  void index_item(const EntryId& id, const Bytes& payload);
};

// State-transition acceptance rule: a candidate extends the hash of the
// latest state and carries a valid platform attestation over the
// reconstructed atom-deliver tuple. System entries (key-manager replica
// records) accept any well-formed record.
SuccFn make_ekiden_succ(const crypto::VerifyKey& platform_pk);

}  // namespace ekiden::ledger
