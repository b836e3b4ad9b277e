#include "ekiden/client.hpp"

#include <algorithm>

namespace ekiden::client {

namespace {
ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }
}  // namespace

Client::Client(uint32_t id, Rng rng, std::vector<node::ComputeNode*> nodes,
               ledger::Ledger& ledger, const crypto::VerifyKey& platform_pk,
               node::Instrumentation* instr)
    : id_(id),
      rng_(std::move(rng)),
      nodes_(std::move(nodes)),
      ledger_(ledger),
      platform_pk_(platform_pk),
      instr_(instr ? instr : &node::null_instrumentation()) {
  sig_ = crypto::SigKeypair::generate(rng_);
  box_ = crypto::PkKeypair::generate(rng_);
  if (nodes_.empty()) fail(Error::Code::bad_argument, "client needs at least one compute node");
}

crypto::Digest Client::create_contract(const contracts::ContractCode& code) {
  Error last(Error::Code::not_found, "no nodes tried");
  for (size_t i = 0; i < nodes_.size(); i++) {
    node::ComputeNode& n = *nodes_[i];
    try {
      crypto::Digest cid = n.create(code);
      // verify the node actually published the genesis
      auto genesis = ledger_.item_at(cid, 0);
      if (!genesis) fail(Error::Code::not_found, "node reported success but no genesis on ledger");
      (void)records::GenesisItem::from_bytes(view(*genesis));
      return cid;
    } catch (const Error& e) {
      if (e.code() == Error::Code::bad_argument) throw;  // duplicate cid: caller's problem
      last = e;
    }
  }
  throw last;
}

Client::ContractInfo Client::fetch_contract_info(const crypto::Digest& cid) const {
  auto genesis_item = ledger_.item_at(cid, 0);
  if (!genesis_item) fail(Error::Code::not_found, "contract not on ledger");
  ContractInfo info;
  auto genesis = records::GenesisItem::from_bytes(view(*genesis_item));
  info.code = genesis.code;
  info.pk_in = genesis.pk_in;
  info.epoch = genesis.epoch;
  // the freshest published input key wins
  auto latest = ledger_.latest_item(cid);
  if (latest && records::item_kind(view(*latest)) == records::ItemKind::transition) {
    auto t = records::TransitionItem::from_bytes(view(*latest));
    info.pk_in = t.sigma.pk_in;
    info.epoch = t.sigma.epoch;
  }
  return info;
}

Client::Attempt Client::begin_attempt(const crypto::Digest& cid, const Bytes& payload) {
  ContractInfo info = fetch_contract_info(cid);
  records::ClientInput ci{payload, seq_++};  // the sequence number keeps equal
                                             // inputs byte-distinct
  Bytes inner = crypto::pk_enc(info.pk_in, view(ci.encoded()), rng_);
  Attempt a;
  a.cid = cid;
  a.inp_ct = records::seal(info.epoch, inner);
  Bytes sp = records::client_sig_payload(cid, view(a.inp_ct));
  a.sig = crypto::sign(sig_, view(sp));
  return a;
}

void Client::verify_reply(const Attempt& a) const {
  // the node is untrusted: check the reply is attested and bound to our input
  if (a.sigma.h_inp.size() < 1) fail(Error::Code::crypto_auth, "reply carries no input digest");
  crypto::Digest mine = crypto::sha256(view(a.inp_ct));
  if (std::find(a.sigma.h_inp.begin(), a.sigma.h_inp.end(), mine) == a.sigma.h_inp.end())
    fail(Error::Code::crypto_auth, "reply not bound to our input ciphertext");

  ContractInfo info = fetch_contract_info(a.cid);
  records::AtomDeliver atom = a.sigma.to_atom(a.cid, a.st_ct);
  Bytes payload = records::attest_payload(records::wrapper_program_hash(info.code), atom.encoded());
  if (!crypto::verify(platform_pk_, a.sigma.sig_tee, view(payload)))
    fail(Error::Code::crypto_auth, "attestation verification failed");
}

void Client::request_leg(Attempt& a) {
  node::Instrumentation::Ctx ctx{nodes_[a.node_index % nodes_.size()]->id(), 0, &a.cid};
  if (!instr_->boundary("request.client_send", ctx))
    fail(Error::Code::dropped, "request dropped in flight");
  auto r = nodes_[a.node_index % nodes_.size()]->request(a.cid, a.inp_ct, sig_.vk, a.sig);
  a.st_ct = r.st_ct;
  a.outp_ct = r.outp_ct;
  a.sigma = r.sigma;
  a.have_reply = true;
  verify_reply(a);
}

std::optional<Bytes> Client::claim_leg(Attempt& a) {
  if (!a.have_reply) fail(Error::Code::bad_argument, "claim before request");
  node::ComputeNode& n = *nodes_[a.node_index % nodes_.size()];
  node::Instrumentation::Ctx ctx{n.id(), 0, &a.cid};
  if (!instr_->boundary("claim.client_send", ctx))
    fail(Error::Code::dropped, "claim dropped in flight");
  auto reply = n.claim_output(a.cid, a.st_ct, a.outp_ct, a.sigma, box_.pk);
  if (!reply) return std::nullopt;  // rejected: previous state used by a parallel query

  wire::Decoder d(view(*reply));
  d.tag("ekiden.claim-reply");
  Bytes outp1 = d.bytes();
  crypto::Signature sig = crypto::Signature::from_bytes(d.bytes());

  ContractInfo info = fetch_contract_info(a.cid);
  Bytes payload = records::attest_payload(records::wrapper_program_hash(info.code), view(outp1));
  if (!crypto::verify(platform_pk_, sig, view(payload)))
    fail(Error::Code::crypto_auth, "output attestation failed");

  auto rel = records::OutputRelease::from_bytes(view(outp1));
  if (rel.h_outp != crypto::sha256(view(a.outp_ct)))
    fail(Error::Code::crypto_auth, "released output does not match the bound digest");

  Bytes outp = crypto::pk_dec(box_, view(rel.out_ct));
  outputs_accepted_++;
  instr_->output_released(a.cid, rel.h_outp, a.sigma.is_empty);
  return outp;
}

Bytes Client::execute(const crypto::Digest& cid, const Bytes& payload) {
  std::optional<Attempt> pending;  // a reply whose transition may already be on chain
  size_t node_index = 0;
  for (int attempt = 0; attempt < kMaxAttempts; attempt++) {
    try {
      if (!pending) {
        Attempt a = begin_attempt(cid, payload);
        a.node_index = node_index;
        request_leg(a);
        pending = a;
      }
      auto out = claim_leg(*pending);
      if (out) return *out;
      pending.reset();  // ledger rejected: stale state, start over
    } catch (const Error& e) {
      if (e.code() == Error::Code::crypto_auth) throw;  // never accept a bad reply
      // transport/availability fault: move to the next node. A pending
      // attempt stays valid; its claim is re-presented rather than re-run.
      node_index++;
      if (pending) pending->node_index = node_index;
    }
  }
  fail(Error::Code::retries_exhausted, "request did not complete within the retry budget");
}

std::optional<ledger::LedgerEntry> Client::read_state(const crypto::Digest& cid) const {
  return ledger_.read(cid);
}

Client::Attempt Client::submit_to_batch(node::ComputeNode& node, const crypto::Digest& cid,
                                        const Bytes& payload) {
  Attempt a = begin_attempt(cid, payload);
  node.submit_to_batch(cid, a.inp_ct, sig_.vk, a.sig);
  return a;
}

void Client::adopt_batch_reply(Attempt& a, const Bytes& st_ct, const Bytes& outp_ct,
                               const records::SigmaBundle& sigma) {
  a.st_ct = st_ct;
  a.outp_ct = outp_ct;
  a.sigma = sigma;
  a.have_reply = true;
  verify_reply(a);
}

}  // namespace ekiden::client
