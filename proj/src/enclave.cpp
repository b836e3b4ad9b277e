#include "ekiden/enclave.hpp"

#include <algorithm>

namespace ekiden::enclave {

using contracts::State;
using contracts::StateDiff;
using crypto::Digest;
using records::WrapperInput;

namespace {
Digest hash_of(const Bytes& b) { return crypto::hash_bytes(ByteView(b.data(), b.size())); }
}  // namespace

// Per-enclave state. Cache and Batch are soft state: erasing them at any
// point affects liveness only, never safety.
struct Platform::Enclave {
  NodeId host = 0;
  contracts::ContractCode code;
  contracts::ContractProgram program;
  Digest program_hash;
  bool terminated = false;
  uint64_t resume_counter = 0;
  bool drop_next = false;

  struct CacheEntry {
    State st;
    Digest head;                 // hash of the chain item's state ciphertext
    uint64_t head_epoch = 0;     // epoch that sealed the head ciphertext
    uint64_t diffs_since_checkpoint = 0;
  };
  std::optional<CacheEntry> cache;

  struct Pending {
    Bytes inp_ct;
    crypto::VerifyKey spk;
  };
  std::vector<Pending> batch;

  std::mutex run_mu;  // one resume at a time per enclave
};

Platform::Platform(Rng& rng) : Platform(rng, Config{}) {}

Platform::Platform(Rng& rng, Config config) : config_(config) {
  att_ = crypto::SigKeypair::generate(rng);
  rng.fill(seed_key_.data(), seed_key_.size());
}

Platform::~Platform() = default;

EnclaveId Platform::install(NodeId host, const contracts::ContractCode& code) {
  if (host_crashed_ && host_crashed_(host))
    fail(Error::Code::node_crashed, "cannot install on a crashed host");
  auto e = std::make_unique<Enclave>();
  e->host = host;
  e->code = code;
  e->program = contracts::resolve(code);
  e->program_hash = records::wrapper_program_hash(code);
  std::lock_guard<std::mutex> lock(mu_);
  EnclaveId eid = next_eid_++;  // never reused
  enclaves_.emplace(eid, std::move(e));
  return eid;
}

void Platform::terminate(EnclaveId eid) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = enclaves_.find(eid);
  if (it != enclaves_.end()) it->second->terminated = true;
}

std::optional<Platform::EnclaveInfo> Platform::info(EnclaveId eid) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = enclaves_.find(eid);
  if (it == enclaves_.end()) return std::nullopt;
  return EnclaveInfo{it->second->host, it->second->program_hash, it->second->code,
                     it->second->terminated};
}

void Platform::erase_soft_state(EnclaveId eid) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = enclaves_.find(eid);
  if (it == enclaves_.end()) return;
  it->second->cache.reset();
  it->second->batch.clear();
}

void Platform::drop_next_output(EnclaveId eid) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = enclaves_.find(eid);
  if (it != enclaves_.end()) it->second->drop_next = true;
}

bool Platform::was_emitted(const Bytes& attest_payload) const {
  std::lock_guard<std::mutex> lock(mu_);
  return emitted_.count(hash_of(attest_payload)) > 0;
}

uint64_t Platform::resume_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return resumes_;
}

// ---------------------------------------------------------------------------
// Wrapper logic. Runs "inside" the enclave: only the key manager and the
// ledger membership interface are reachable from here.

namespace {

struct WrapperEnv {
  keys::KeyProvider* keysrv;
  const ledger::LedgerView* ledger;
  const Platform::Config* config;
  Rng* rng;
  EnclaveId eid;
};

keys::EpochKeyBundle fetch_keys(const WrapperEnv& env, const Digest& cid, uint64_t epoch) {
  if (!env.keysrv) fail(Error::Code::not_found, "key manager unreachable");
  return env.keysrv->contract_keys(env.eid, cid, epoch);
}

// (create): fresh cid, zero state sealed under the current epoch.
Bytes do_create(Platform::Enclave& e, const WrapperEnv& env) {
  Digest cid = crypto::hash_canonical(e.code);
  uint64_t epoch = env.keysrv->current_epoch();
  auto bundle = fetch_keys(env, cid, epoch);

  records::CreateResult r;
  r.code = e.code;
  r.cid = cid;
  Bytes zero = e.program.zero_state.encoded();
  r.st0_ct = records::seal(epoch, crypto::sym_enc(bundle.k_state, ByteView(zero.data(), zero.size()), *env.rng));
  r.pk_in = bundle.in_kp.pk;
  r.epoch = epoch;

  e.cache = Platform::Enclave::CacheEntry{e.program.zero_state, hash_of(r.st0_ct), epoch, 0};
  return r.encoded();
}

struct Decrypted {
  contracts::State st;
  uint64_t epoch = 0;
};

Decrypted decrypt_state(const WrapperEnv& env, const Digest& cid, const Bytes& st_ct) {
  auto [epoch, ct] = records::unseal(ByteView(st_ct.data(), st_ct.size()));
  auto bundle = fetch_keys(env, cid, epoch);
  Bytes plain = crypto::sym_dec(bundle.k_state, ByteView(ct.data(), ct.size()));
  return {State::from_bytes(ByteView(plain.data(), plain.size())), epoch};
}

struct DecryptedInput {
  Bytes payload;
  crypto::VerifyKey spk;
};

DecryptedInput open_input(const WrapperEnv& env, const Digest& cid, const Bytes& inp_ct,
                          const crypto::VerifyKey& spk, const crypto::Signature& sig) {
  Bytes sig_payload = records::client_sig_payload(cid, ByteView(inp_ct.data(), inp_ct.size()));
  if (!crypto::verify(spk, sig, ByteView(sig_payload.data(), sig_payload.size())))
    fail(Error::Code::crypto_auth, "client signature rejected");
  auto [epoch, ct] = records::unseal(ByteView(inp_ct.data(), inp_ct.size()));
  auto bundle = fetch_keys(env, cid, epoch);
  Bytes plain = crypto::pk_dec(bundle.in_kp, ByteView(ct.data(), ct.size()));
  auto client_input = records::ClientInput::from_bytes(ByteView(plain.data(), plain.size()));
  return {client_input.payload, spk};
}

// (request): simple-protocol path, full state in and full state out.
std::pair<Bytes, Bytes> do_request(Platform::Enclave& e, const WrapperEnv& env,
                                   const WrapperInput& in) {
  Digest cid = crypto::hash_canonical(e.code);
  if (in.cid != cid) fail(Error::Code::bad_argument, "request addressed to a different contract");

  DecryptedInput inp = open_input(env, cid, in.inp_ct, in.spk, in.client_sig);
  Decrypted prev = decrypt_state(env, cid, in.st_ct);

  auto result = e.program.apply(prev.st, ByteView(inp.payload.data(), inp.payload.size()), inp.spk);

  uint64_t cur = env.keysrv->current_epoch();
  auto bundle = fetch_keys(env, cid, cur);
  Bytes outp_ct = records::seal(
      cur, crypto::sym_enc(bundle.k_out, ByteView(result.outp.data(), result.outp.size()), *env.rng));

  records::AtomDeliver atom;
  atom.cid = cid;
  atom.h_inp = {hash_of(in.inp_ct)};
  atom.h_prev = hash_of(in.st_ct);
  atom.h_outp = {hash_of(outp_ct)};
  atom.spk = {in.spk};
  atom.epoch = cur;
  atom.pk_in = bundle.in_kp.pk;

  if (result.st == prev.st && prev.epoch == cur) {
    // Read-only: nothing to persist, output binds to the existing head.
    atom.is_empty = true;
  } else {
    Bytes st_new = result.st.encoded();
    atom.st_ct = records::seal(
        cur, crypto::sym_enc(bundle.k_state, ByteView(st_new.data(), st_new.size()), *env.rng));
  }

  e.cache = Platform::Enclave::CacheEntry{
      result.st, atom.is_empty ? atom.h_prev : hash_of(atom.st_ct), cur, 0};
  return {atom.encoded(), outp_ct};
}

// (request) in batch mode: verify and buffer.
Bytes do_submit(Platform::Enclave& e, const WrapperEnv& env, const WrapperInput& in) {
  Digest cid = crypto::hash_canonical(e.code);
  if (in.cid != cid) fail(Error::Code::bad_argument, "submit addressed to a different contract");
  Bytes sig_payload = records::client_sig_payload(cid, ByteView(in.inp_ct.data(), in.inp_ct.size()));
  if (!crypto::verify(in.spk, in.client_sig, ByteView(sig_payload.data(), sig_payload.size())))
    fail(Error::Code::crypto_auth, "client signature rejected");
  e.batch.push_back({in.inp_ct, in.spk});

  records::SubmitAck ack;
  ack.cid = cid;
  ack.h_inp = hash_of(in.inp_ct);
  ack.batch_size = static_cast<uint32_t>(e.batch.size());
  return ack.encoded();
}

Bytes cache_miss_record() {
  wire::Encoder e;
  e.tag("ekiden.cache-miss");
  return e.out;
}

// Rebuild the latest state from a checkpoint plus diffs, verifying that each
// log element is on the ledger and that the hash links hold.
void reconstruct_cache(Platform::Enclave& e, const WrapperEnv& env, const Digest& cid,
                       const std::vector<Bytes>& wal) {
  if (wal.empty()) fail(Error::Code::corrupt_log, "empty write-ahead log");
  if (!env.ledger) fail(Error::Code::not_found, "ledger unreachable");

  State st;
  Digest head;
  uint64_t head_epoch = 0;
  uint64_t diffs = 0;

  for (size_t i = 0; i < wal.size(); i++) {
    const Bytes& item = wal[i];
    if (!env.ledger->contains(cid, item))
      fail(Error::Code::corrupt_log, "log element " + std::to_string(i) + " not on ledger");
    auto kind = records::item_kind(ByteView(item.data(), item.size()));

    Bytes st_ct;
    bool is_diff = false;
    if (kind == records::ItemKind::genesis) {
      st_ct = records::GenesisItem::from_bytes(ByteView(item.data(), item.size())).st0_ct;
    } else if (kind == records::ItemKind::transition) {
      auto t = records::TransitionItem::from_bytes(ByteView(item.data(), item.size()));
      if (i > 0 && t.sigma.h_prev != head)
        fail(Error::Code::corrupt_log, "log element " + std::to_string(i) + " breaks the hash chain");
      st_ct = t.st_ct;
      is_diff = t.sigma.is_diff;
    } else {
      fail(Error::Code::corrupt_log, "unexpected system record in log");
    }

    auto [epoch, ct] = records::unseal(ByteView(st_ct.data(), st_ct.size()));
    auto bundle = fetch_keys(env, cid, epoch);
    Bytes plain;
    try {
      plain = crypto::sym_dec(bundle.k_state, ByteView(ct.data(), ct.size()));
    } catch (const Error&) {
      fail(Error::Code::corrupt_log, "log element " + std::to_string(i) + " failed authentication");
    }

    if (is_diff) {
      if (i == 0) fail(Error::Code::corrupt_log, "log must start at a checkpoint");
      st = contracts::apply(st, StateDiff::from_bytes(ByteView(plain.data(), plain.size())));
      diffs++;
    } else {
      st = State::from_bytes(ByteView(plain.data(), plain.size()));
      diffs = 0;
    }
    head = hash_of(st_ct);
    head_epoch = epoch;
  }

  e.cache = Platform::Enclave::CacheEntry{std::move(st), head, head_epoch, diffs};
}

// (commit batch): run every buffered input in order against the cached state
// and emit one coalesced transition.
std::pair<Bytes, Bytes> do_commit_batch(Platform::Enclave& e, const WrapperEnv& env,
                                        const WrapperInput& in) {
  Digest cid = crypto::hash_canonical(e.code);
  if (in.cid != cid) fail(Error::Code::bad_argument, "commit addressed to a different contract");

  if (!e.cache) {
    if (!in.has_wal) return {cache_miss_record(), {}};
    reconstruct_cache(e, env, cid, in.wal_items);
  }
  if (e.batch.empty()) fail(Error::Code::bad_argument, "commit of an empty batch");

  auto batch = std::move(e.batch);
  e.batch.clear();

  uint64_t cur = env.keysrv->current_epoch();
  auto bundle = fetch_keys(env, cid, cur);

  records::AtomDeliver atom;
  atom.cid = cid;
  atom.epoch = cur;
  atom.pk_in = bundle.in_kp.pk;
  atom.h_prev = e.cache->head;

  State st = e.cache->st;
  std::vector<Bytes> outp_cts;
  for (const auto& pending : batch) {
    Bytes outp;
    try {
      // signatures were checked at submit; a stale or undecryptable input is
      // skipped and recorded so one bad request cannot sink the batch
      auto [epoch_in, ct] = records::unseal(ByteView(pending.inp_ct.data(), pending.inp_ct.size()));
      auto in_bundle = fetch_keys(env, cid, epoch_in);
      Bytes plain = crypto::pk_dec(in_bundle.in_kp, ByteView(ct.data(), ct.size()));
      auto client_input = records::ClientInput::from_bytes(ByteView(plain.data(), plain.size()));
      auto result =
          e.program.apply(st, ByteView(client_input.payload.data(), client_input.payload.size()),
                          pending.spk);
      st = result.st;
      outp = result.outp;
    } catch (const Error&) {
      outp = contracts::Output{false, "request skipped", 0}.encoded();
    }
    Bytes outp_ct =
        records::seal(cur, crypto::sym_enc(bundle.k_out, ByteView(outp.data(), outp.size()), *env.rng));
    atom.h_inp.push_back(hash_of(pending.inp_ct));
    atom.h_outp.push_back(hash_of(outp_ct));
    atom.spk.push_back(pending.spk);
    outp_cts.push_back(std::move(outp_ct));
  }

  StateDiff delta = contracts::diff(st, e.cache->st);
  if (delta.empty() && e.cache->head_epoch == cur) {
    atom.is_empty = true;  // read-only batch, served from cache, no write
  } else if (e.cache->diffs_since_checkpoint + 1 >= env.config->checkpoint_interval ||
             e.cache->head_epoch != cur) {
    // periodic checkpoint, or first write of a new epoch re-encrypts in full
    Bytes full = st.encoded();
    atom.st_ct =
        records::seal(cur, crypto::sym_enc(bundle.k_state, ByteView(full.data(), full.size()), *env.rng));
    atom.is_diff = false;
  } else {
    Bytes diff_bytes = delta.encoded(e.program.diff_pad_class);
    atom.st_ct = records::seal(
        cur, crypto::sym_enc(bundle.k_state, ByteView(diff_bytes.data(), diff_bytes.size()), *env.rng));
    atom.is_diff = true;
  }

  // optimistic cache update; a ledger reject invalidates it via the node
  uint64_t diffs = atom.is_empty ? e.cache->diffs_since_checkpoint
                                 : (atom.is_diff ? e.cache->diffs_since_checkpoint + 1 : 0);
  e.cache = Platform::Enclave::CacheEntry{
      st, atom.is_empty ? e.cache->head : hash_of(atom.st_ct), atom.is_empty ? e.cache->head_epoch : cur,
      diffs};

  wire::Encoder outs;
  outs.tag("ekiden.outp-list");
  outs.u32(static_cast<uint32_t>(outp_cts.size()));
  for (const auto& o : outp_cts) outs.bytes(o);
  return {atom.encoded(), outs.out};
}

// (claim output): the key-release leg of atomic delivery. Nothing decrypts
// until the bound transition (or, for read-only results, its base state) is
// on the ledger.
Bytes do_claim(Platform::Enclave& e, const WrapperEnv& env, const WrapperInput& in) {
  Digest cid = crypto::hash_canonical(e.code);
  if (in.cid != cid) fail(Error::Code::bad_argument, "claim addressed to a different contract");
  if (!in.claim_sigma) fail(Error::Code::bad_argument, "claim without sigma");
  const records::SigmaBundle& sigma = *in.claim_sigma;

  Digest h_out = hash_of(in.claim_outp_ct);
  if (std::find(sigma.h_outp.begin(), sigma.h_outp.end(), h_out) == sigma.h_outp.end())
    fail(Error::Code::crypto_auth, "output ciphertext does not match the bound digest");

  if (!env.ledger) fail(Error::Code::not_found, "ledger unreachable");
  bool on_chain;
  if (sigma.is_empty) {
    on_chain = env.ledger->state_hash_on_chain(cid, sigma.h_prev);
  } else {
    records::TransitionItem item{in.claim_st_ct, sigma};
    on_chain = env.ledger->contains(cid, item.encoded());
  }
  if (!on_chain) fail(Error::Code::not_found, "state transition not on ledger; output withheld");

  auto [epoch, ct] = records::unseal(ByteView(in.claim_outp_ct.data(), in.claim_outp_ct.size()));
  auto bundle = fetch_keys(env, cid, epoch);
  Bytes outp = crypto::sym_dec(bundle.k_out, ByteView(ct.data(), ct.size()));

  records::OutputRelease rel;
  rel.cid = cid;
  rel.h_outp = h_out;
  rel.out_ct = crypto::pk_enc(in.epk, ByteView(outp.data(), outp.size()), *env.rng);
  return rel.encoded();
}

}  // namespace

ResumeOutput Platform::resume(EnclaveId eid, const records::WrapperInput& input) {
  Platform::Enclave* e;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = enclaves_.find(eid);
    if (it == enclaves_.end()) fail(Error::Code::not_found, "unknown enclave");
    e = it->second.get();
  }
  std::lock_guard<std::mutex> run_lock(e->run_mu);
  if (e->terminated) fail(Error::Code::enclave_terminated, "enclave terminated");
  if (host_crashed_ && host_crashed_(e->host)) fail(Error::Code::node_crashed, "host crashed");

  // deterministic per (eid, resume counter)
  wire::Encoder seed;
  seed.tag("ekiden.enclave-rng");
  seed.bytes(ByteView(seed_key_.data(), seed_key_.size()));
  seed.u64(eid);
  seed.u64(e->resume_counter++);
  Rng rng(crypto::hash_bytes(ByteView(seed.out.data(), seed.out.size())).v);

  WrapperEnv env{key_provider_, ledger_view_, &config_, &rng, eid};

  Bytes outp1, outp2;
  switch (input.op) {
    case WrapperInput::Op::create:
      outp1 = do_create(*e, env);
      break;
    case WrapperInput::Op::request:
      std::tie(outp1, outp2) = do_request(*e, env, input);
      break;
    case WrapperInput::Op::submit:
      outp1 = do_submit(*e, env, input);
      break;
    case WrapperInput::Op::commit_batch:
      std::tie(outp1, outp2) = do_commit_batch(*e, env, input);
      break;
    case WrapperInput::Op::claim_output:
      outp1 = do_claim(*e, env, input);
      break;
  }

  Bytes payload = records::attest_payload(e->program_hash, ByteView(outp1.data(), outp1.size()));
  ResumeOutput out;
  out.outp1 = std::move(outp1);
  out.sig_tee = crypto::sign(att_, ByteView(payload.data(), payload.size()));
  out.outp2 = std::move(outp2);

  {
    std::lock_guard<std::mutex> lock(mu_);
    emitted_.insert(hash_of(payload));
    resumes_++;
    if (e->drop_next) {
      e->drop_next = false;
      fail(Error::Code::dropped, "enclave reply dropped by adversary");
    }
  }
  return out;
}

}  // namespace ekiden::enclave
