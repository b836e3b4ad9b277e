#include "ekiden/ledger.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace ekiden::ledger {

Ledger::Ledger(SuccFn succ) : succ_(std::move(succ)) {}

WriteStatus Ledger::write(const EntryId& id, Bytes payload, std::string writer) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = storage_.find(id);
  const LedgerEntry* cur = it == storage_.end() ? nullptr : &it->second;
  if (!succ_(id, cur, payload)) {
    rejected_++;
    return WriteStatus::reject;
  }
  LedgerEntry& entry = storage_[id];
  entry.id = id;
  entry.items.push_back({payload, std::move(writer)});
  accepted_++;
  index_item(id, entry.items.back().payload);
  on_accepted(id, entry.items.back().payload);
  return WriteStatus::receipt;
}

// membership lookups run per claim; keep them O(log n) on digests
void Ledger::index_item(const EntryId& id, const Bytes& payload) {
  EntryIndex& idx = index_[id];
  idx.payload_hashes.insert(crypto::sha256(ByteView(payload.data(), payload.size())));
  if (records::item_kind(ByteView(payload.data(), payload.size())) != records::ItemKind::system)
    idx.state_hashes.insert(records::item_state_hash(ByteView(payload.data(), payload.size())));
}

std::optional<LedgerEntry> Ledger::read(const EntryId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  reads_++;
  auto it = storage_.find(id);
  if (it == storage_.end()) return std::nullopt;
  return it->second;
}

bool Ledger::contains(const EntryId& id, const Bytes& payload) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  return it->second.payload_hashes.count(crypto::sha256(ByteView(payload.data(), payload.size()))) >
         0;
}

bool Ledger::state_hash_on_chain(const EntryId& id, const crypto::Digest& h) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  return it->second.state_hashes.count(h) > 0;
}

uint64_t Ledger::item_count(const EntryId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = storage_.find(id);
  return it == storage_.end() ? 0 : it->second.items.size();
}

std::optional<Bytes> Ledger::item_at(const EntryId& id, uint64_t index) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = storage_.find(id);
  if (it == storage_.end() || index >= it->second.items.size()) return std::nullopt;
  return it->second.items[index].payload;
}

std::optional<Bytes> Ledger::latest_item(const EntryId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = storage_.find(id);
  if (it == storage_.end() || it->second.items.empty()) return std::nullopt;
  reads_++;
  return it->second.items.back().payload;
}

std::vector<EntryId> Ledger::entry_ids() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<EntryId> out;
  for (const auto& [id, _] : storage_) out.push_back(id);
  return out;
}

void Ledger::on_accepted(const EntryId&, const Bytes&) {}

void Ledger::dump(std::ostream& out) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& [id, entry] : storage_) {
    for (size_t i = 0; i < entry.items.size(); i++) {
      wire::Encoder e;
      e.tag("ekiden.ledger-dump");
      e.bytes(id.bytes());
      e.u64(i);
      e.str(entry.items[i].writer);
      e.bytes(entry.items[i].payload);
      out << hex_encode(ByteView(e.out.data(), e.out.size())) << "\n";
    }
  }
}

void Ledger::restore(std::istream& in) {
  std::lock_guard<std::mutex> lock(mu_);
  storage_.clear();
  index_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Bytes raw = hex_decode(line);
    wire::Decoder d(ByteView(raw.data(), raw.size()));
    d.tag("ekiden.ledger-dump");
    EntryId id = crypto::Digest::from_bytes(d.bytes());
    uint64_t index = d.u64();
    std::string writer = d.str();
    Bytes payload = d.bytes();
    d.expect_done();
    LedgerEntry& entry = storage_[id];
    entry.id = id;
    if (entry.items.size() != index) fail(Error::Code::corrupt_log, "dump items out of order");
    entry.items.push_back({std::move(payload), std::move(writer)});
    index_item(id, entry.items.back().payload);
  }
}

uint64_t Ledger::accepted_writes() const {
  std::lock_guard<std::mutex> lock(mu_);
  return accepted_;
}

uint64_t Ledger::rejected_writes() const {
  std::lock_guard<std::mutex> lock(mu_);
  return rejected_;
}

uint64_t Ledger::entry_bytes(const EntryId& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = storage_.find(id);
  if (it == storage_.end()) return 0;
  uint64_t total = 0;
  for (const auto& item : it->second.items) total += item.payload.size();
  return total;
}

uint64_t Ledger::read_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return reads_;
}

// ---------------------------------------------------------------------------

SuccFn make_ekiden_succ(const crypto::VerifyKey& platform_pk) {
  return [platform_pk](const EntryId& id, const LedgerEntry* cur, const Bytes& candidate) -> bool {
    records::ItemKind kind;
    try {
      kind = records::item_kind(ByteView(candidate.data(), candidate.size()));
    } catch (const Error&) {
      return false;
    }

    try {
      switch (kind) {
        case records::ItemKind::genesis: {
          if (cur != nullptr && !cur->items.empty()) return false;  // one genesis per entry
          auto g = records::GenesisItem::from_bytes(ByteView(candidate.data(), candidate.size()));
          if (g.cid != id) return false;
          if (g.cid != crypto::hash_bytes(ByteView(g.code.encoded().data(), g.code.encoded().size())))
            return false;
          Bytes payload = records::attest_payload(records::wrapper_program_hash(g.code),
                                                  g.to_create_result().encoded());
          return crypto::verify(platform_pk, g.sig_tee, ByteView(payload.data(), payload.size()));
        }
        case records::ItemKind::transition: {
          if (cur == nullptr || cur->items.empty()) return false;  // needs a genesis
          auto t = records::TransitionItem::from_bytes(ByteView(candidate.data(), candidate.size()));
          if (t.sigma.is_empty || t.st_ct.empty()) return false;  // read-only results never land on chain
          // the latest state in storage
          const Bytes& head = cur->items.back().payload;
          if (records::item_kind(head) == records::ItemKind::system) return false;
          if (t.sigma.h_prev != records::item_state_hash(head)) return false;
          auto genesis = records::GenesisItem::from_bytes(
              ByteView(cur->items.front().payload.data(), cur->items.front().payload.size()));
          records::AtomDeliver atom = t.sigma.to_atom(genesis.cid, t.st_ct);
          Bytes payload =
              records::attest_payload(records::wrapper_program_hash(genesis.code), atom.encoded());
          return crypto::verify(platform_pk, t.sigma.sig_tee, ByteView(payload.data(), payload.size()));
        }
        case records::ItemKind::system: {
          // key-manager replica records: any well-formed record appends
          if (id == records::grants_entry_id()) {
            (void)records::GrantRecord::from_bytes(ByteView(candidate.data(), candidate.size()));
            return true;
          }
          if (id == records::confirm_entry_id()) {
            (void)records::ConfirmRecord::from_bytes(ByteView(candidate.data(), candidate.size()));
            return true;
          }
          if (id == records::committee_entry_id()) {
            (void)records::CommitteeRecord::from_bytes(ByteView(candidate.data(), candidate.size()));
            return true;
          }
          return false;
        }
      }
    } catch (const Error&) {
      return false;  // malformed candidate
    }
    return false;
  };
}

}  // namespace ekiden::ledger
