#include "ekiden/keymgr.hpp"

#include <cmath>

namespace ekiden::keymgr {

using crypto::Digest;
using group::Element;
using group::Scalar;

uint32_t Committee::threshold() const {
  uint32_t k = static_cast<uint32_t>(std::ceil(f * n));
  if (k == 0) k = 1;
  return k;
}

KeyManagerService::KeyManagerService(const group::Group& g, Config config,
                                     keys::EpochClock* epochs, ledger::Ledger* sync_ledger,
                                     const enclave::Platform* platform, Rng rng)
    : g_(g),
      config_(config),
      epochs_(epochs),
      sync_ledger_(sync_ledger),
      platform_(platform),
      rng_(std::move(rng)) {
  if (config_.committee.n < config_.committee.threshold() + 1)
    fail(Error::Code::bad_argument, "committee too small for its threshold");
  for (uint32_t i = 1; i <= config_.committee.n; i++) members_.push_back(Member{i, true, {}});
}

uint64_t KeyManagerService::current_epoch() const { return epochs_ ? epochs_->current : 0; }

Element KeyManagerService::prf_base(const Digest& cid, uint64_t epoch) const {
  wire::Encoder e;
  e.tag("ekiden.prf");
  e.bytes(cid.bytes());
  e.u64(epoch);
  return g_.hash_to_group(ByteView(e.out.data(), e.out.size()));
}

void KeyManagerService::ensure_dkg_locked(const Digest& cid) {
  if (!members_.empty() && members_.front().shares.count(cid)) return;
  uint32_t k = config_.committee.threshold();
  uint32_t n = config_.committee.n;

  // each member deals a degree-k polynomial; shares are the column sums
  std::vector<Scalar> acc(n, g_.scalar_zero());
  for (uint32_t dealer = 0; dealer < n; dealer++) {
    std::vector<Scalar> coeffs;
    for (uint32_t c = 0; c <= k; c++) coeffs.push_back(g_.scalar_random(rng_));
    for (uint32_t j = 0; j < n; j++) {
      // evaluate dealer's polynomial at member index j+1
      Scalar x = g_.scalar_from_u64(j + 1);
      Scalar v = g_.scalar_zero();
      for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
        v = g_.scalar_add(g_.scalar_mul(v, x), *it);
      acc[j] = g_.scalar_add(acc[j], v);
    }
  }
  for (uint32_t j = 0; j < n; j++) members_[j].shares[cid] = acc[j];
}

void KeyManagerService::dkg_init(const Digest& cid) {
  std::lock_guard<std::mutex> lock(mu_);
  ensure_dkg_locked(cid);
}

void KeyManagerService::check_window(uint64_t epoch) const {
  uint64_t cur = current_epoch();
  if (epoch > cur) fail(Error::Code::stale_epoch, "epoch not yet reached");
  if (cur - epoch > config_.delta)
    fail(Error::Code::stale_epoch, "epoch outside the forward-secrecy window");
}

bool KeyManagerService::charge_budget_locked(keys::NodeId node, const Digest& cid, uint64_t epoch) {
  wire::Encoder e;
  e.tag("ekiden.grant-tag");
  e.u32(node);
  e.bytes(cid.bytes());
  e.u64(epoch);
  Digest tag = crypto::hash_bytes(ByteView(e.out.data(), e.out.size()));

  auto key = std::make_pair(node, current_epoch());
  auto& granted = grants_[key];
  if (granted.count(tag)) return true;  // same key already granted, no new charge
  if (granted.size() >= config_.kappa) return false;
  granted.insert(tag);
  if (sync_ledger_) {
    records::GrantRecord rec{node, key.second, tag};
    sync_ledger_->write(records::grants_entry_id(), rec.encoded(), "keymgr");
  }
  return true;
}

PrfPiece KeyManagerService::eval_share(uint32_t member_index, const Digest& cid, uint64_t epoch,
                                       keys::NodeId requester) {
  std::lock_guard<std::mutex> lock(mu_);
  check_window(epoch);
  if (!charge_budget_locked(requester, cid, epoch))
    fail(Error::Code::budget_exhausted, "privacy budget exhausted for this node");
  ensure_dkg_locked(cid);
  for (const auto& m : members_) {
    if (m.index != member_index) continue;
    if (!m.online) fail(Error::Code::not_found, "member offline");
    return PrfPiece{m.index, g_.exp(prf_base(cid, epoch), m.shares.at(cid))};
  }
  fail(Error::Code::not_found, "no such committee member");
}

Element KeyManagerService::combine_epoch_key(const std::vector<PrfPiece>& pieces) const {
  if (pieces.size() < size_t(config_.committee.threshold()) + 1)
    fail(Error::Code::bad_argument, "need at least k+1 PRF pieces");
  std::vector<uint32_t> indices;
  for (const auto& p : pieces) indices.push_back(p.index);
  auto lambda = group::lagrange_coeffs(g_, indices);
  Element acc = g_.identity();
  for (const auto& p : pieces) acc = g_.mul(acc, g_.exp(p.value, lambda.at(p.index)));
  return acc;
}

keys::EpochKeyBundle KeyManagerService::derive_bundle(const Element& k_ct, const Digest& cid,
                                                      uint64_t epoch) const {
  auto kdf = [&](const char* label) {
    wire::Encoder e;
    e.tag("ekiden.kdf");
    e.bytes(k_ct.b);
    e.bytes(cid.bytes());
    e.u64(epoch);
    e.str(label);
    return crypto::hash_bytes(ByteView(e.out.data(), e.out.size()));
  };
  keys::EpochKeyBundle b;
  b.epoch = epoch;
  b.k_state = crypto::SymKey::from_bytes(kdf("state").bytes());
  b.k_out = crypto::SymKey::from_bytes(kdf("out").bytes());
  b.in_kp = crypto::PkKeypair::from_seed(kdf("in"));
  b.confirm_tag = kdf("confirm");
  return b;
}

keys::EpochKeyBundle KeyManagerService::combine_and_confirm_locked(const Digest& cid,
                                                                   uint64_t epoch) {
  auto cache_key = std::make_pair(cid, epoch);
  auto hit = bundle_cache_.find(cache_key);
  if (hit != bundle_cache_.end()) return hit->second;

  ensure_dkg_locked(cid);
  uint32_t k = config_.committee.threshold();
  std::vector<PrfPiece> pieces;
  Element base = prf_base(cid, epoch);
  for (const auto& m : members_) {
    if (!m.online) continue;
    pieces.push_back(PrfPiece{m.index, g_.exp(base, m.shares.at(cid))});
    if (pieces.size() == size_t(k) + 1) break;
  }
  if (pieces.size() < size_t(k) + 1)
    fail(Error::Code::not_found, "committee below reconstruction threshold");

  Element k_ct = combine_epoch_key(pieces);
  keys::EpochKeyBundle bundle = derive_bundle(k_ct, cid, epoch);

  // key confirmation: first derivation publishes the tag; later ones must
  // match it, which catches corrupted pieces and mixed epochs
  auto key = std::make_pair(cid, epoch);
  auto it = confirm_book_.find(key);
  if (it == confirm_book_.end()) {
    confirm_book_[key] = bundle.confirm_tag;
    if (sync_ledger_) {
      records::ConfirmRecord rec{cid, epoch, bundle.confirm_tag};
      sync_ledger_->write(records::confirm_entry_id(), rec.encoded(), "keymgr");
    }
  } else if (it->second != bundle.confirm_tag) {
    fail(Error::Code::crypto_auth, "key confirmation tag mismatch");
  }
  bundle_cache_.emplace(cache_key, bundle);
  return bundle;
}

keys::EpochKeyBundle KeyManagerService::contract_keys(keys::EnclaveId requester, const Digest& cid,
                                                      uint64_t epoch) {
  keys::NodeId host = 0;
  if (platform_) {
    auto info = platform_->info(requester);
    if (!info) fail(Error::Code::crypto_auth, "unknown requester enclave");
    // the requester must be executing the wrapper of exactly this contract
    if (crypto::hash_canonical(info->code) != cid)
      fail(Error::Code::crypto_auth, "requester does not execute this contract");
    host = info->host;
  }
  std::lock_guard<std::mutex> lock(mu_);
  check_window(epoch);
  if (!charge_budget_locked(host, cid, epoch))
    fail(Error::Code::budget_exhausted, "privacy budget exhausted for this node");
  return combine_and_confirm_locked(cid, epoch);
}

void KeyManagerService::reshare(Committee next, Rng& rng) {
  std::lock_guard<std::mutex> lock(mu_);
  uint32_t k_old = config_.committee.threshold();
  uint32_t k_new = next.threshold();
  if (next.n < k_new + 1) fail(Error::Code::bad_argument, "new committee too small");

  std::vector<const Member*> donors;
  for (const auto& m : members_) {
    if (m.online) donors.push_back(&m);
    if (donors.size() == size_t(k_old) + 1) break;
  }
  if (donors.size() < size_t(k_old) + 1)
    fail(Error::Code::not_found, "not enough online members to reshare");

  std::vector<uint32_t> donor_idx;
  for (const auto* d : donors) donor_idx.push_back(d->index);
  auto lambda = group::lagrange_coeffs(g_, donor_idx);

  std::vector<Member> fresh;
  for (uint32_t i = 1; i <= next.n; i++) fresh.push_back(Member{i, true, {}});

  // every contract's secret is re-dealt: donor i shares its own share with a
  // fresh degree-k_new polynomial; new shares are lambda-weighted sums
  std::set<Digest> cids;
  for (const auto& m : members_)
    for (const auto& [cid, _] : m.shares) cids.insert(cid);

  for (const Digest& cid : cids) {
    for (const Member* donor : donors) {
      std::vector<Scalar> coeffs;
      coeffs.push_back(donor->shares.at(cid));
      for (uint32_t c = 0; c < k_new; c++) coeffs.push_back(g_.scalar_random(rng));
      for (uint32_t j = 0; j < next.n; j++) {
        Scalar x = g_.scalar_from_u64(j + 1);
        Scalar v = g_.scalar_zero();
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
          v = g_.scalar_add(g_.scalar_mul(v, x), *it);
        Scalar weighted = g_.scalar_mul(lambda.at(donor->index), v);
        auto& slot = fresh[j].shares[cid];
        if (slot.b.empty()) slot = g_.scalar_zero();
        slot = g_.scalar_add(slot, weighted);
      }
    }
  }

  members_ = std::move(fresh);  // old shares destroyed
  config_.committee = next;

  if (sync_ledger_) {
    records::CommitteeRecord rec{current_epoch(), next.n,
                                 static_cast<uint32_t>(std::lround(next.f * 1000.0))};
    sync_ledger_->write(records::committee_entry_id(), rec.encoded(), "keymgr");
  }
}

void KeyManagerService::set_member_online(uint32_t member_index, bool online) {
  std::lock_guard<std::mutex> lock(mu_);
  for (auto& m : members_)
    if (m.index == member_index) m.online = online;
}

keys::EpochKeyBundle KeyManagerService::audit_bundle(const Digest& cid, uint64_t epoch) {
  std::lock_guard<std::mutex> lock(mu_);
  ensure_dkg_locked(cid);
  return derive_bundle(g_.exp(prf_base(cid, epoch), audit_master_secret_locked(cid)), cid, epoch);
}

group::Scalar KeyManagerService::audit_master_secret(const Digest& cid) {
  std::lock_guard<std::mutex> lock(mu_);
  ensure_dkg_locked(cid);
  return audit_master_secret_locked(cid);
}

std::vector<shamir::Share> KeyManagerService::audit_shares(const Digest& cid) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<shamir::Share> out;
  for (const auto& m : members_) {
    auto it = m.shares.find(cid);
    if (it != m.shares.end()) out.push_back({m.index, it->second});
  }
  return out;
}

group::Scalar KeyManagerService::audit_master_secret_locked(const Digest& cid) {
  std::vector<shamir::Share> shares;
  for (const auto& m : members_) {
    shares.push_back({m.index, m.shares.at(cid)});
    if (shares.size() == size_t(config_.committee.threshold()) + 1) break;
  }
  return shamir::reconstruct(g_, shares);
}

}  // namespace ekiden::keymgr
