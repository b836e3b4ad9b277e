#include "ekiden/node.hpp"

#include <algorithm>

namespace ekiden::node {

using records::WrapperInput;

namespace {
ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }
}  // namespace

Instrumentation& null_instrumentation() {
  static Instrumentation instance;
  return instance;
}

ComputeNode::ComputeNode(NodeId id, enclave::Platform& platform, ledger::Ledger& ledger,
                         Instrumentation* instr, NodeConfig config)
    : id_(id),
      platform_(platform),
      ledger_(ledger),
      instr_(instr ? instr : &null_instrumentation()),
      config_(config) {}

void ComputeNode::check_alive() const {
  if (crashed_) fail(Error::Code::node_crashed, "compute node is down");
}

bool ComputeNode::cross(std::string_view step, const crypto::Digest* cid, EnclaveId eid) {
  Instrumentation::Ctx ctx{id_, eid, cid};
  if (!instr_->boundary(step, ctx)) return false;
  check_alive();
  return true;
}

void ComputeNode::crash() {
  crashed_ = true;
  for (auto& [cid, eid] : hosted_) platform_.terminate(eid);
  hosted_.clear();
  pending_.clear();
}

void ComputeNode::restart() { crashed_ = false; }

EnclaveId ComputeNode::ensure_enclave(const crypto::Digest& cid) {
  check_alive();
  auto it = hosted_.find(cid);
  if (it != hosted_.end()) {
    auto info = platform_.info(it->second);
    if (info && !info->terminated) return it->second;
    hosted_.erase(it);
  }
  // created transparently from the on-chain contract code
  auto genesis_item = ledger_.item_at(cid, 0);
  if (!genesis_item) fail(Error::Code::not_found, "contract not on ledger");
  auto genesis = records::GenesisItem::from_bytes(view(*genesis_item));
  EnclaveId eid = platform_.install(id_, genesis.code);
  hosted_[cid] = eid;
  return eid;
}

crypto::Digest ComputeNode::create(const contracts::ContractCode& code) {
  check_alive();
  crypto::Digest cid = crypto::hash_canonical(code);
  if (!cross("create.install", &cid)) fail(Error::Code::dropped, "install dropped");
  EnclaveId eid = platform_.install(id_, code);

  if (!cross("create.enclave_create", &cid, eid)) fail(Error::Code::dropped, "create dropped");
  WrapperInput in;
  in.op = WrapperInput::Op::create;
  auto out = platform_.resume(eid, in);
  auto created = records::CreateResult::from_bytes(view(out.outp1));

  records::GenesisItem g;
  g.code = created.code;
  g.cid = created.cid;
  g.st0_ct = created.st0_ct;
  g.pk_in = created.pk_in;
  g.epoch = created.epoch;
  g.sig_tee = out.sig_tee;
  Bytes item = g.encoded();

  if (!cross("create.ledger_write", &cid, eid)) fail(Error::Code::dropped, "genesis write dropped");
  instr_->message("create.ledger_write", {id_, eid, &cid}, view(item));
  if (ledger_.write(created.cid, item, "node" + std::to_string(id_)) != ledger::WriteStatus::receipt)
    fail(Error::Code::bad_argument, "genesis rejected (duplicate cid)");
  hosted_[created.cid] = eid;
  return created.cid;
}

Bytes ComputeNode::latest_state_ct(const crypto::Digest& cid) const {
  auto latest = ledger_.latest_item(cid);
  if (!latest) fail(Error::Code::not_found, "contract not on ledger");
  const Bytes& head = *latest;
  switch (records::item_kind(view(head))) {
    case records::ItemKind::genesis:
      return records::GenesisItem::from_bytes(view(head)).st0_ct;
    case records::ItemKind::transition: {
      auto t = records::TransitionItem::from_bytes(view(head));
      if (t.sigma.is_diff)
        fail(Error::Code::bad_argument, "latest item is a diff; node must run in wal mode");
      return t.st_ct;
    }
    default:
      fail(Error::Code::corrupt_log, "unexpected item on contract entry");
  }
}

ComputeNode::RequestResult ComputeNode::request(const crypto::Digest& cid, const Bytes& inp_ct,
                                                const crypto::VerifyKey& spk,
                                                const crypto::Signature& sig) {
  check_alive();
  if (config_.wal_mode) {
    // extended protocol with a batch of one
    submit_to_batch(cid, inp_ct, spk, sig);
    auto batch = commit_batch(cid);
    if (!batch) fail(Error::Code::dropped, "batch commit lost a write race");
    RequestResult r;
    r.st_ct = batch->st_ct;
    r.sigma = batch->sigma;
    r.outp_ct = batch->outp_cts.at(0);
    return r;
  }

  if (!cross("request.ledger_read", &cid)) fail(Error::Code::dropped, "state read dropped");
  Bytes st_ct = latest_state_ct(cid);

  EnclaveId eid = ensure_enclave(cid);
  if (!cross("request.enclave_exec", &cid, eid)) fail(Error::Code::dropped, "resume dropped");
  WrapperInput in;
  in.op = WrapperInput::Op::request;
  in.cid = cid;
  in.inp_ct = inp_ct;
  in.spk = spk;
  in.client_sig = sig;
  in.st_ct = st_ct;
  auto out = platform_.resume(eid, in);
  if (!cross("request.enclave_reply", &cid, eid)) fail(Error::Code::dropped, "enclave reply dropped");
  instr_->message("request.enclave_reply", {id_, eid, &cid}, view(out.outp1));

  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  RequestResult r;
  r.st_ct = atom.st_ct;
  r.outp_ct = out.outp2;
  r.sigma = records::SigmaBundle::from_atom(atom, out.sig_tee);
  return r;
}

std::optional<Bytes> ComputeNode::claim_output(const crypto::Digest& cid, const Bytes& st_ct,
                                               const Bytes& outp_ct,
                                               const records::SigmaBundle& sigma,
                                               const records::BoxPk& epk) {
  check_alive();
  if (!sigma.is_empty) {
    records::TransitionItem item{st_ct, sigma};
    Bytes encoded = item.encoded();
    if (!cross("claim.ledger_write", &cid)) fail(Error::Code::dropped, "ledger write dropped");
    if (!ledger_.contains(cid, encoded)) {
      instr_->message("claim.ledger_write", {id_, 0, &cid}, view(encoded));
      if (ledger_.write(cid, encoded, "node" + std::to_string(id_)) != ledger::WriteStatus::receipt) {
        // somebody else may have landed the identical item first
        if (!ledger_.contains(cid, encoded)) return std::nullopt;
      }
    }
  }

  EnclaveId eid = ensure_enclave(cid);
  if (!cross("claim.enclave_release", &cid, eid)) fail(Error::Code::dropped, "release dropped");
  WrapperInput in;
  in.op = WrapperInput::Op::claim_output;
  in.cid = cid;
  in.claim_st_ct = st_ct;
  in.claim_outp_ct = outp_ct;
  in.claim_sigma = sigma;
  in.epk = epk;
  auto out = platform_.resume(eid, in);
  if (!cross("claim.enclave_reply", &cid, eid)) fail(Error::Code::dropped, "release reply dropped");
  instr_->message("claim.enclave_reply", {id_, eid, &cid}, view(out.outp1));

  // hand back outp1 plus its attestation so the client can verify
  wire::Encoder reply;
  reply.tag("ekiden.claim-reply");
  reply.bytes(out.outp1);
  reply.bytes(out.sig_tee.bytes());
  return reply.out;
}

void ComputeNode::submit_to_batch(const crypto::Digest& cid, const Bytes& inp_ct,
                                  const crypto::VerifyKey& spk, const crypto::Signature& sig) {
  check_alive();
  EnclaveId eid = ensure_enclave(cid);
  if (!cross("batch.submit", &cid, eid)) fail(Error::Code::dropped, "submit dropped");
  WrapperInput in;
  in.op = WrapperInput::Op::submit;
  in.cid = cid;
  in.inp_ct = inp_ct;
  in.spk = spk;
  in.client_sig = sig;
  platform_.resume(eid, in);
  pending_[cid].push_back({inp_ct, spk, sig});  // kept for cache-miss replays
}

uint64_t ComputeNode::buffered(const crypto::Digest& cid) const {
  auto it = pending_.find(cid);
  return it == pending_.end() ? 0 : it->second.size();
}

std::optional<ComputeNode::BatchResult> ComputeNode::drive_commit(const crypto::Digest& cid,
                                                                  EnclaveId eid, bool with_wal) {
  WrapperInput in;
  in.op = WrapperInput::Op::commit_batch;
  in.cid = cid;
  if (with_wal) {
    WalView wal = reconstruct_state(cid);
    in.has_wal = true;
    in.wal_items = wal.items;
  }
  auto out = platform_.resume(eid, in);

  {
    wire::Decoder probe(view(out.outp1));
    if (probe.str() == "ekiden.cache-miss") return std::nullopt;
  }

  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  BatchResult r;
  r.st_ct = atom.st_ct;
  r.sigma = records::SigmaBundle::from_atom(atom, out.sig_tee);
  r.h_inp = atom.h_inp;
  wire::Decoder d(view(out.outp2));
  d.tag("ekiden.outp-list");
  uint32_t n = d.u32();
  for (uint32_t i = 0; i < n; i++) r.outp_cts.push_back(d.bytes());
  return r;
}

std::optional<ComputeNode::BatchResult> ComputeNode::commit_batch(const crypto::Digest& cid) {
  check_alive();
  auto pit = pending_.find(cid);
  if (pit == pending_.end() || pit->second.empty()) return std::nullopt;  // empty commit: no-op
  std::vector<PendingSubmit> buffered_inputs = pit->second;

  EnclaveId eid = ensure_enclave(cid);
  if (!cross("batch.commit", &cid, eid)) fail(Error::Code::dropped, "commit dropped");

  auto resubmit = [&](EnclaveId target) {
    for (const auto& p : buffered_inputs) {
      WrapperInput in;
      in.op = WrapperInput::Op::submit;
      in.cid = cid;
      in.inp_ct = p.inp_ct;
      in.spk = p.spk;
      in.client_sig = p.sig;
      platform_.resume(target, in);
    }
  };

  auto result = drive_commit(cid, eid, /*with_wal=*/false);
  if (!result) {
    // cache miss: fetch the log from the ledger and retry once
    result = drive_commit(cid, eid, /*with_wal=*/true);
    if (!result) fail(Error::Code::corrupt_log, "cache miss persisted after log replay");
  }

  if (result->sigma.is_empty) {
    // read-only batch served from cache: an honest node refreshes a stale
    // cache so reads reflect the chain head (writes are policed by succ,
    // reads are not)
    auto latest = ledger_.latest_item(cid);
    if (latest && records::item_state_hash(view(*latest)) != result->sigma.h_prev) {
      platform_.erase_soft_state(eid);
      resubmit(eid);
      result = drive_commit(cid, eid, /*with_wal=*/true);
      if (!result) fail(Error::Code::corrupt_log, "cache miss persisted after log replay");
    }
  }

  if (!result->sigma.is_empty) {
    records::TransitionItem item{result->st_ct, result->sigma};
    if (!cross("batch.ledger_write", &cid, eid)) fail(Error::Code::dropped, "batch write dropped");
    instr_->message("batch.ledger_write", {id_, eid, &cid}, view(item.encoded()));
    if (ledger_.write(cid, item.encoded(), "node" + std::to_string(id_)) !=
        ledger::WriteStatus::receipt) {
      // stale cache lost the race: rebuild from the chain and retry once
      platform_.erase_soft_state(eid);
      resubmit(eid);
      result = drive_commit(cid, eid, /*with_wal=*/true);
      if (!result) fail(Error::Code::corrupt_log, "cache miss persisted after log replay");
      if (!result->sigma.is_empty) {
        records::TransitionItem retry{result->st_ct, result->sigma};
        instr_->message("batch.ledger_write", {id_, eid, &cid}, view(retry.encoded()));
        if (ledger_.write(cid, retry.encoded(), "node" + std::to_string(id_)) !=
            ledger::WriteStatus::receipt)
          return std::nullopt;  // lost again; caller retries from the top
      }
    }
  }

  pending_.erase(cid);
  return result;
}

ComputeNode::WalView ComputeNode::reconstruct_state(const crypto::Digest& cid) const {
  uint64_t count = ledger_.item_count(cid);
  if (count == 0) fail(Error::Code::not_found, "contract not on ledger");

  // walk back to the most recent checkpoint (genesis or full-state item)
  std::vector<Bytes> tail;
  uint64_t checkpoint = 0;
  for (uint64_t i = count; i-- > 0;) {
    Bytes item = *ledger_.item_at(cid, i);
    auto kind = records::item_kind(view(item));
    bool is_checkpoint =
        kind == records::ItemKind::genesis ||
        (kind == records::ItemKind::transition &&
         !records::TransitionItem::from_bytes(view(item)).sigma.is_diff);
    tail.push_back(std::move(item));
    if (is_checkpoint) {
      checkpoint = i;
      break;
    }
  }

  WalView wal;
  wal.checkpoint_index = checkpoint;
  crypto::Digest head = records::item_state_hash(view(tail.back()));
  wal.items.push_back(tail.back());
  for (size_t k = tail.size() - 1; k-- > 0;) {
    auto t = records::TransitionItem::from_bytes(view(tail[k]));
    if (t.sigma.h_prev != head)
      fail(Error::Code::corrupt_log,
           "hash chain broken at item " + std::to_string(checkpoint + (tail.size() - 1 - k)));
    head = crypto::sha256(view(t.st_ct));
    wal.items.push_back(tail[k]);
    wal.diff_count++;
  }
  return wal;
}

}  // namespace ekiden::node
