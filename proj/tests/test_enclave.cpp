#include "doctest.h"
#include "ekiden/enclave.hpp"
#include "ekiden/keymgr.hpp"
#include "ekiden/ledger.hpp"

using namespace ekiden;
using namespace ekiden::enclave;
using records::WrapperInput;

namespace {

ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }

// Full wrapper environment: platform, ledger, key manager, epoch clock.
struct Rig {
  Rng rng{404};
  std::unique_ptr<group::Group> g = group::make_ristretto_group();
  keys::EpochClock epochs;
  std::unique_ptr<Platform> platform;
  std::unique_ptr<ledger::Ledger> led;
  std::unique_ptr<keymgr::KeyManagerService> km;

  contracts::ContractCode code{"token", 0};
  crypto::Digest cid;

  explicit Rig(Platform::Config pc = {}) {
    platform = std::make_unique<Platform>(rng, pc);
    led = std::make_unique<ledger::Ledger>(ledger::make_ekiden_succ(platform->attestation_pk()));
    km = std::make_unique<keymgr::KeyManagerService>(
        *g, keymgr::KeyManagerService::Config{{5, 0.4}, 64, 1}, &epochs, led.get(),
        platform.get(), Rng(505));
    platform->set_key_provider(km.get());
    platform->set_ledger_view(led.get());
    cid = crypto::hash_canonical(code);
  }

  EnclaveId fresh_enclave(keys::NodeId host = 0) { return platform->install(host, code); }

  // run create and put the genesis on the ledger
  records::GenesisItem create_and_write(EnclaveId eid) {
    WrapperInput in;
    in.op = WrapperInput::Op::create;
    auto out = platform->resume(eid, in);
    auto created = records::CreateResult::from_bytes(view(out.outp1));
    records::GenesisItem g;
    g.code = created.code;
    g.cid = created.cid;
    g.st0_ct = created.st0_ct;
    g.pk_in = created.pk_in;
    g.epoch = created.epoch;
    g.sig_tee = out.sig_tee;
    REQUIRE(led->write(created.cid, g.encoded(), "node0") == ledger::WriteStatus::receipt);
    return g;
  }
};

struct TestClient {
  crypto::SigKeypair sig;
  crypto::PkKeypair box;
  uint64_t seq = 0;

  explicit TestClient(uint64_t seed) {
    Rng rng(seed);
    sig = crypto::SigKeypair::generate(rng);
    box = crypto::PkKeypair::generate(rng);
  }

  // encrypt + sign an input for a contract, per the client protocol
  std::tuple<Bytes, crypto::Signature> sealed_input(const crypto::Digest& cid,
                                                    const records::BoxPk& pk_in, uint64_t epoch,
                                                    const Bytes& payload, Rng& rng) {
    records::ClientInput ci{payload, seq++};
    Bytes inner = crypto::pk_enc(pk_in, view(ci.encoded()), rng);
    Bytes inp_ct = records::seal(epoch, inner);
    Bytes sp = records::client_sig_payload(cid, view(inp_ct));
    return {inp_ct, crypto::sign(sig, view(sp))};
  }
};

WrapperInput request_input(const crypto::Digest& cid, const Bytes& inp_ct,
                           const TestClient& client, const crypto::Signature& s,
                           const Bytes& st_ct) {
  WrapperInput in;
  in.op = WrapperInput::Op::request;
  in.cid = cid;
  in.inp_ct = inp_ct;
  in.spk = client.sig.vk;
  in.client_sig = s;
  in.st_ct = st_ct;
  return in;
}

}  // namespace

TEST_CASE("install: fresh ids, recorded program hash, terminate semantics") {
  Rig rig;
  EnclaveId a = rig.platform->install(0, rig.code);
  EnclaveId b = rig.platform->install(0, rig.code);
  CHECK(a != b);

  auto info = rig.platform->info(a);
  REQUIRE(info.has_value());
  CHECK(info->program_hash == records::wrapper_program_hash(rig.code));

  rig.platform->terminate(a);
  WrapperInput in;
  in.op = WrapperInput::Op::create;
  CHECK_THROWS_WITH_AS(rig.platform->resume(a, in), "enclave terminated", Error);
  CHECK_NOTHROW(rig.platform->resume(b, in));
}

TEST_CASE("attestation binds program and outp1; tampering breaks verification") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  WrapperInput in;
  in.op = WrapperInput::Op::create;
  auto out = rig.platform->resume(eid, in);

  Bytes payload = records::attest_payload(records::wrapper_program_hash(rig.code), view(out.outp1));
  CHECK(crypto::verify(rig.platform->attestation_pk(), out.sig_tee, view(payload)));
  CHECK(rig.platform->was_emitted(payload));

  Bytes flipped = out.outp1;
  flipped[flipped.size() / 2] ^= 1;
  Bytes bad = records::attest_payload(records::wrapper_program_hash(rig.code), view(flipped));
  CHECK_FALSE(crypto::verify(rig.platform->attestation_pk(), out.sig_tee, view(bad)));
  CHECK_FALSE(rig.platform->was_emitted(bad));
}

TEST_CASE("create: cid is the code hash, st0 decrypts to the zero state") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  CHECK(genesis.cid == rig.cid);

  // same contract bytes -> same cid on a second enclave
  EnclaveId eid2 = rig.fresh_enclave();
  WrapperInput in;
  in.op = WrapperInput::Op::create;
  auto out2 = rig.platform->resume(eid2, in);
  CHECK(records::CreateResult::from_bytes(view(out2.outp1)).cid == rig.cid);

  auto [epoch, ct] = records::unseal(view(genesis.st0_ct));
  auto bundle = rig.km->audit_bundle(rig.cid, epoch);
  Bytes zero = crypto::sym_dec(bundle.k_state, view(ct));
  CHECK(contracts::State::from_bytes(view(zero)) == contracts::State{});
}

TEST_CASE("request: atom-deliver binds the exact input and previous state") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  auto [inp_ct, sig] =
      alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch, contracts::token_mint(100, 0), rig.rng);
  auto out = rig.platform->resume(eid, request_input(rig.cid, inp_ct, alice, sig, genesis.st0_ct));
  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));

  CHECK(atom.h_prev == crypto::sha256(view(genesis.st0_ct)));
  CHECK(atom.h_inp == std::vector<crypto::Digest>{crypto::sha256(view(inp_ct))});
  CHECK(atom.h_outp == std::vector<crypto::Digest>{crypto::sha256(view(out.outp2))});
  CHECK(atom.spk == std::vector<crypto::VerifyKey>{alice.sig.vk});
  CHECK_FALSE(atom.is_empty);
  CHECK_FALSE(atom.is_diff);
}

TEST_CASE("request: forged client signature aborts with no atom-deliver") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1), mallory(2);

  auto [inp_ct, sig] =
      alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch, contracts::token_mint(100, 0), rig.rng);
  // signature by an unrelated key
  Bytes sp = records::client_sig_payload(rig.cid, view(inp_ct));
  crypto::Signature forged = crypto::sign(mallory.sig, view(sp));
  CHECK_THROWS_AS(
      rig.platform->resume(eid, request_input(rig.cid, inp_ct, alice, forged, genesis.st0_ct)),
      Error);
}

TEST_CASE("request: input encrypted under the wrong key aborts") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  records::BoxPk wrong = crypto::PkKeypair::generate(rig.rng).pk;
  auto [inp_ct, sig] =
      alice.sealed_input(rig.cid, wrong, genesis.epoch, contracts::token_mint(100, 0), rig.rng);
  CHECK_THROWS_AS(
      rig.platform->resume(eid, request_input(rig.cid, inp_ct, alice, sig, genesis.st0_ct)), Error);
}

TEST_CASE("claim-output: ledger membership gates the key release") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  auto [inp_ct, sig] =
      alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch, contracts::token_mint(100, 0), rig.rng);
  auto out = rig.platform->resume(eid, request_input(rig.cid, inp_ct, alice, sig, genesis.st0_ct));
  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  records::SigmaBundle sigma = records::SigmaBundle::from_atom(atom, out.sig_tee);

  WrapperInput claim;
  claim.op = WrapperInput::Op::claim_output;
  claim.cid = rig.cid;
  claim.claim_st_ct = atom.st_ct;
  claim.claim_outp_ct = out.outp2;
  claim.claim_sigma = sigma;
  claim.epk = alice.box.pk;

  // before the ledger write: output withheld
  CHECK_THROWS_AS(rig.platform->resume(eid, claim), Error);

  records::TransitionItem item{atom.st_ct, sigma};
  REQUIRE(rig.led->write(rig.cid, item.encoded(), "node0") == ledger::WriteStatus::receipt);

  // after: decryptable by the client
  auto rel_out = rig.platform->resume(eid, claim);
  auto rel = records::OutputRelease::from_bytes(view(rel_out.outp1));
  Bytes outp = crypto::pk_dec(alice.box, view(rel.out_ct));
  auto result = contracts::Output::from_bytes(view(outp));
  CHECK(result.ok);
  CHECK(result.value == 100);

  // claim with an output ciphertext from a different request: hash mismatch
  WrapperInput bad = claim;
  bad.claim_outp_ct = rig.rng.bytes(out.outp2.size());
  CHECK_THROWS_AS(rig.platform->resume(eid, bad), Error);
}

TEST_CASE("claim-output can run on a different enclave of the same contract") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave(0);
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  auto [inp_ct, sig] =
      alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch, contracts::token_mint(7, 0), rig.rng);
  auto out = rig.platform->resume(eid, request_input(rig.cid, inp_ct, alice, sig, genesis.st0_ct));
  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  records::SigmaBundle sigma = records::SigmaBundle::from_atom(atom, out.sig_tee);
  records::TransitionItem item{atom.st_ct, sigma};
  REQUIRE(rig.led->write(rig.cid, item.encoded(), "node0") == ledger::WriteStatus::receipt);

  rig.platform->terminate(eid);
  EnclaveId other = rig.fresh_enclave(1);  // second node's enclave
  WrapperInput claim;
  claim.op = WrapperInput::Op::claim_output;
  claim.cid = rig.cid;
  claim.claim_st_ct = atom.st_ct;
  claim.claim_outp_ct = out.outp2;
  claim.claim_sigma = sigma;
  claim.epk = alice.box.pk;
  auto rel_out = rig.platform->resume(other, claim);
  auto rel = records::OutputRelease::from_bytes(view(rel_out.outp1));
  CHECK(contracts::Output::from_bytes(view(crypto::pk_dec(alice.box, view(rel.out_ct)))).ok);
}

TEST_CASE("read-only request takes the empty fast path") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  auto [inp_ct, sig] = alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch,
                                          contracts::token_get_balance(0), rig.rng);
  auto out = rig.platform->resume(eid, request_input(rig.cid, inp_ct, alice, sig, genesis.st0_ct));
  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  CHECK(atom.is_empty);
  CHECK(atom.st_ct.empty());

  // claim gates on the base state being on chain, which it is (genesis)
  WrapperInput claim;
  claim.op = WrapperInput::Op::claim_output;
  claim.cid = rig.cid;
  claim.claim_outp_ct = out.outp2;
  claim.claim_sigma = records::SigmaBundle::from_atom(atom, out.sig_tee);
  claim.epk = alice.box.pk;
  auto rel_out = rig.platform->resume(eid, claim);
  auto rel = records::OutputRelease::from_bytes(view(rel_out.outp1));
  auto result = contracts::Output::from_bytes(view(crypto::pk_dec(alice.box, view(rel.out_ct))));
  CHECK(result.ok);
  CHECK(result.value == 0);
}

TEST_CASE("batch: submit buffers, commit emits one multi-segment atom-deliver") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  // mint first so transfers have funds
  auto [mint_ct, mint_sig] =
      alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch, contracts::token_mint(1000, 0), rig.rng);
  auto mint_out =
      rig.platform->resume(eid, request_input(rig.cid, mint_ct, alice, mint_sig, genesis.st0_ct));
  auto mint_atom = records::AtomDeliver::from_bytes(view(mint_out.outp1));
  records::TransitionItem mint_item{mint_atom.st_ct,
                                    records::SigmaBundle::from_atom(mint_atom, mint_out.sig_tee)};
  REQUIRE(rig.led->write(rig.cid, mint_item.encoded(), "node0") == ledger::WriteStatus::receipt);

  TestClient bob(2);
  for (int i = 0; i < 3; i++) {
    auto [inp_ct, sig] = alice.sealed_input(
        rig.cid, genesis.pk_in, genesis.epoch,
        contracts::token_transfer(contracts::token_account(bob.sig.vk), 10, 100 + uint64_t(i)), rig.rng);
    WrapperInput sub;
    sub.op = WrapperInput::Op::submit;
    sub.cid = rig.cid;
    sub.inp_ct = inp_ct;
    sub.spk = alice.sig.vk;
    sub.client_sig = sig;
    auto ack_out = rig.platform->resume(eid, sub);
    CHECK(records::SubmitAck::from_bytes(view(ack_out.outp1)).batch_size == uint32_t(i + 1));
  }

  WrapperInput commit;
  commit.op = WrapperInput::Op::commit_batch;
  commit.cid = rig.cid;
  auto out = rig.platform->resume(eid, commit);
  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  CHECK(atom.h_inp.size() == 3);
  CHECK(atom.h_outp.size() == 3);
  CHECK(atom.is_diff);
  CHECK(atom.h_prev == crypto::sha256(view(mint_atom.st_ct)));
}

TEST_CASE("commit without cache or log reports a cache miss; a log rebuilds") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  // one committed transition so the log has a diff to replay
  auto [mint_ct, mint_sig] =
      alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch, contracts::token_mint(50, 0), rig.rng);
  auto mint_out =
      rig.platform->resume(eid, request_input(rig.cid, mint_ct, alice, mint_sig, genesis.st0_ct));
  auto mint_atom = records::AtomDeliver::from_bytes(view(mint_out.outp1));
  records::TransitionItem mint_item{mint_atom.st_ct,
                                    records::SigmaBundle::from_atom(mint_atom, mint_out.sig_tee)};
  REQUIRE(rig.led->write(rig.cid, mint_item.encoded(), "node0") == ledger::WriteStatus::receipt);

  // a fresh enclave has no cache
  EnclaveId cold = rig.fresh_enclave(1);
  auto [inp_ct, sig] = alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch,
                                          contracts::token_get_balance(1), rig.rng);
  WrapperInput sub;
  sub.op = WrapperInput::Op::submit;
  sub.cid = rig.cid;
  sub.inp_ct = inp_ct;
  sub.spk = alice.sig.vk;
  sub.client_sig = sig;
  rig.platform->resume(cold, sub);

  WrapperInput commit;
  commit.op = WrapperInput::Op::commit_batch;
  commit.cid = rig.cid;
  auto miss = rig.platform->resume(cold, commit);
  wire::Decoder d(view(miss.outp1));
  CHECK_NOTHROW(d.tag("ekiden.cache-miss"));

  // supply the log: genesis (checkpoint) + the full-state transition
  rig.platform->resume(cold, sub);  // resubmit; the failed commit consumed the batch
  WrapperInput commit2 = commit;
  commit2.has_wal = true;
  commit2.wal_items = {genesis.encoded(), mint_item.encoded()};
  auto out = rig.platform->resume(cold, commit2);
  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  CHECK(atom.is_empty);  // get_balance only
  CHECK(atom.h_prev == crypto::sha256(view(mint_atom.st_ct)));
}

TEST_CASE("log elements not on the ledger are rejected during reconstruction") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);
  auto [inp_ct, sig] = alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch,
                                          contracts::token_get_balance(0), rig.rng);
  WrapperInput sub;
  sub.op = WrapperInput::Op::submit;
  sub.cid = rig.cid;
  sub.inp_ct = inp_ct;
  sub.spk = alice.sig.vk;
  sub.client_sig = sig;
  EnclaveId cold = rig.fresh_enclave(1);
  rig.platform->resume(cold, sub);

  records::GenesisItem fake = genesis;
  fake.st0_ct = rig.rng.bytes(64);  // never written to the ledger
  WrapperInput commit;
  commit.op = WrapperInput::Op::commit_batch;
  commit.cid = rig.cid;
  commit.has_wal = true;
  commit.wal_items = {fake.encoded()};
  CHECK_THROWS_AS(rig.platform->resume(cold, commit), Error);
}

TEST_CASE("soft state can be erased at any point without breaking safety") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  auto genesis = rig.create_and_write(eid);
  TestClient alice(1);

  rig.platform->erase_soft_state(eid);  // drop the create-time cache

  // simple-protocol requests carry the state in, so they still work
  auto [inp_ct, sig] =
      alice.sealed_input(rig.cid, genesis.pk_in, genesis.epoch, contracts::token_mint(5, 0), rig.rng);
  auto out = rig.platform->resume(eid, request_input(rig.cid, inp_ct, alice, sig, genesis.st0_ct));
  auto atom = records::AtomDeliver::from_bytes(view(out.outp1));
  CHECK(atom.h_prev == crypto::sha256(view(genesis.st0_ct)));
}

TEST_CASE("adversary can drop an enclave reply after execution") {
  Rig rig;
  EnclaveId eid = rig.fresh_enclave();
  rig.platform->drop_next_output(eid);
  WrapperInput in;
  in.op = WrapperInput::Op::create;
  CHECK_THROWS_WITH_AS(rig.platform->resume(eid, in), "enclave reply dropped by adversary", Error);
  // next resume goes through
  CHECK_NOTHROW(rig.platform->resume(eid, in));
}

TEST_CASE("key manager refuses enclaves running a different contract") {
  Rig rig;
  contracts::ContractCode other_code{"counter", 3};
  EnclaveId other = rig.platform->install(0, other_code);
  CHECK_THROWS_AS(rig.km->contract_keys(other, rig.cid, 0), Error);
  CHECK_NOTHROW(rig.km->contract_keys(other, crypto::hash_canonical(other_code), 0));
}
