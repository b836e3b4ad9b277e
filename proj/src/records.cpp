#include "ekiden/records.hpp"

namespace ekiden::records {

namespace {

void put_digests(wire::Encoder& e, const std::vector<Digest>& ds) {
  e.u32(static_cast<uint32_t>(ds.size()));
  for (const auto& d : ds) e.bytes(d.bytes());
}

std::vector<Digest> get_digests(wire::Decoder& d) {
  uint32_t n = d.u32();
  std::vector<Digest> out;
  out.reserve(n);
  for (uint32_t i = 0; i < n; i++) out.push_back(Digest::from_bytes(d.bytes()));
  return out;
}

void put_keys(wire::Encoder& e, const std::vector<VerifyKey>& ks) {
  e.u32(static_cast<uint32_t>(ks.size()));
  for (const auto& k : ks) e.bytes(k.bytes());
}

std::vector<VerifyKey> get_keys(wire::Decoder& d) {
  uint32_t n = d.u32();
  std::vector<VerifyKey> out;
  out.reserve(n);
  for (uint32_t i = 0; i < n; i++) out.push_back(VerifyKey::from_bytes(d.bytes()));
  return out;
}

void put_boxpk(wire::Encoder& e, const BoxPk& pk) { e.bytes(ByteView(pk.data(), pk.size())); }

BoxPk get_boxpk(wire::Decoder& d) {
  Bytes b = d.bytes();
  if (b.size() != crypto::kBoxKeySize) fail(Error::Code::decode, "bad box key width");
  BoxPk pk;
  std::copy(b.begin(), b.end(), pk.begin());
  return pk;
}

}  // namespace

Digest wrapper_program_hash(const contracts::ContractCode& code) {
  wire::Encoder e;
  e.tag("ekiden.program");
  e.nested(code.encoded());
  return crypto::hash_bytes(ByteView(e.out.data(), e.out.size()));
}

Bytes attest_payload(const Digest& program_hash, ByteView outp1) {
  wire::Encoder e;
  e.tag("ekiden.attest");
  e.bytes(program_hash.bytes());
  e.bytes(outp1);
  return e.out;
}

// --------------------------------------------------------------------------

void CreateResult::encode(wire::Encoder& e) const {
  e.tag("ekiden.created");
  e.nested(code.encoded());
  e.bytes(cid.bytes());
  e.bytes(st0_ct);
  put_boxpk(e, pk_in);
  e.u64(epoch);
}

Bytes CreateResult::encoded() const {
  wire::Encoder e;
  encode(e);
  return e.out;
}

CreateResult CreateResult::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.created");
  CreateResult r;
  r.code = contracts::ContractCode::from_bytes(d.bytes());
  r.cid = Digest::from_bytes(d.bytes());
  r.st0_ct = d.bytes();
  r.pk_in = get_boxpk(d);
  r.epoch = d.u64();
  d.expect_done();
  return r;
}

void AtomDeliver::encode(wire::Encoder& e) const {
  e.tag("ekiden.atom-deliver");
  e.bytes(cid.bytes());
  put_digests(e, h_inp);
  e.bytes(h_prev.bytes());
  e.bytes(st_ct);
  e.boolean(is_diff);
  e.boolean(is_empty);
  put_digests(e, h_outp);
  put_keys(e, spk);
  e.u64(epoch);
  put_boxpk(e, pk_in);
}

Bytes AtomDeliver::encoded() const {
  wire::Encoder e;
  encode(e);
  return e.out;
}

AtomDeliver AtomDeliver::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.atom-deliver");
  AtomDeliver a;
  a.cid = Digest::from_bytes(d.bytes());
  a.h_inp = get_digests(d);
  a.h_prev = Digest::from_bytes(d.bytes());
  a.st_ct = d.bytes();
  a.is_diff = d.boolean();
  a.is_empty = d.boolean();
  a.h_outp = get_digests(d);
  a.spk = get_keys(d);
  a.epoch = d.u64();
  a.pk_in = get_boxpk(d);
  d.expect_done();
  return a;
}

AtomDeliver SigmaBundle::to_atom(const Digest& cid, const Bytes& st_ct) const {
  AtomDeliver a;
  a.cid = cid;
  a.h_inp = h_inp;
  a.h_prev = h_prev;
  a.st_ct = st_ct;
  a.is_diff = is_diff;
  a.is_empty = is_empty;
  a.h_outp = h_outp;
  a.spk = spk;
  a.epoch = epoch;
  a.pk_in = pk_in;
  return a;
}

SigmaBundle SigmaBundle::from_atom(const AtomDeliver& a, const Signature& sig) {
  SigmaBundle s;
  s.sig_tee = sig;
  s.h_inp = a.h_inp;
  s.h_prev = a.h_prev;
  s.h_outp = a.h_outp;
  s.spk = a.spk;
  s.epoch = a.epoch;
  s.pk_in = a.pk_in;
  s.is_diff = a.is_diff;
  s.is_empty = a.is_empty;
  return s;
}

void SigmaBundle::encode(wire::Encoder& e) const {
  e.tag("ekiden.sigma");
  e.bytes(sig_tee.bytes());
  put_digests(e, h_inp);
  e.bytes(h_prev.bytes());
  put_digests(e, h_outp);
  put_keys(e, spk);
  e.u64(epoch);
  put_boxpk(e, pk_in);
  e.boolean(is_diff);
  e.boolean(is_empty);
}

SigmaBundle SigmaBundle::decode(wire::Decoder& d) {
  d.tag("ekiden.sigma");
  SigmaBundle s;
  s.sig_tee = Signature::from_bytes(d.bytes());
  s.h_inp = get_digests(d);
  s.h_prev = Digest::from_bytes(d.bytes());
  s.h_outp = get_digests(d);
  s.spk = get_keys(d);
  s.epoch = d.u64();
  s.pk_in = get_boxpk(d);
  s.is_diff = d.boolean();
  s.is_empty = d.boolean();
  return s;
}

void OutputRelease::encode(wire::Encoder& e) const {
  e.tag("ekiden.out-release");
  e.bytes(cid.bytes());
  e.bytes(h_outp.bytes());
  e.bytes(out_ct);
}

Bytes OutputRelease::encoded() const {
  wire::Encoder e;
  encode(e);
  return e.out;
}

OutputRelease OutputRelease::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.out-release");
  OutputRelease r;
  r.cid = Digest::from_bytes(d.bytes());
  r.h_outp = Digest::from_bytes(d.bytes());
  r.out_ct = d.bytes();
  d.expect_done();
  return r;
}

void SubmitAck::encode(wire::Encoder& e) const {
  e.tag("ekiden.submit-ack");
  e.bytes(cid.bytes());
  e.bytes(h_inp.bytes());
  e.u32(batch_size);
}

Bytes SubmitAck::encoded() const {
  wire::Encoder e;
  encode(e);
  return e.out;
}

SubmitAck SubmitAck::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.submit-ack");
  SubmitAck a;
  a.cid = Digest::from_bytes(d.bytes());
  a.h_inp = Digest::from_bytes(d.bytes());
  a.batch_size = d.u32();
  d.expect_done();
  return a;
}

// --------------------------------------------------------------------------

CreateResult GenesisItem::to_create_result() const {
  CreateResult r;
  r.code = code;
  r.cid = cid;
  r.st0_ct = st0_ct;
  r.pk_in = pk_in;
  r.epoch = epoch;
  return r;
}

Bytes GenesisItem::encoded() const {
  wire::Encoder e;
  e.tag("ekiden.genesis");
  e.nested(code.encoded());
  e.bytes(cid.bytes());
  e.bytes(st0_ct);
  put_boxpk(e, pk_in);
  e.u64(epoch);
  e.bytes(sig_tee.bytes());
  return e.out;
}

GenesisItem GenesisItem::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.genesis");
  GenesisItem g;
  g.code = contracts::ContractCode::from_bytes(d.bytes());
  g.cid = Digest::from_bytes(d.bytes());
  g.st0_ct = d.bytes();
  g.pk_in = get_boxpk(d);
  g.epoch = d.u64();
  g.sig_tee = Signature::from_bytes(d.bytes());
  d.expect_done();
  return g;
}

Bytes TransitionItem::encoded() const {
  wire::Encoder e;
  e.tag("ekiden.transition");
  e.bytes(st_ct);
  wire::Encoder se;
  sigma.encode(se);
  e.nested(se.out);
  return e.out;
}

TransitionItem TransitionItem::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.transition");
  TransitionItem t;
  t.st_ct = d.bytes();
  Bytes sb = d.bytes();
  wire::Decoder sd(sb);
  t.sigma = SigmaBundle::decode(sd);
  sd.expect_done();
  d.expect_done();
  return t;
}

ItemKind item_kind(ByteView item) {
  wire::Decoder d(item);
  std::string tag = d.str();
  if (tag == "ekiden.genesis") return ItemKind::genesis;
  if (tag == "ekiden.transition") return ItemKind::transition;
  return ItemKind::system;
}

Digest item_state_hash(ByteView item) {
  switch (item_kind(item)) {
    case ItemKind::genesis: {
      GenesisItem g = GenesisItem::from_bytes(item);
      return crypto::hash_bytes(ByteView(g.st0_ct.data(), g.st0_ct.size()));
    }
    case ItemKind::transition: {
      TransitionItem t = TransitionItem::from_bytes(item);
      return crypto::hash_bytes(ByteView(t.st_ct.data(), t.st_ct.size()));
    }
    default:
      fail(Error::Code::bad_argument, "system item has no state");
  }
}

// --------------------------------------------------------------------------

Bytes WrapperInput::encoded() const {
  wire::Encoder e;
  e.tag("ekiden.wrapper-input");
  e.u32(static_cast<uint32_t>(op));
  e.bytes(cid.bytes());
  e.bytes(inp_ct);
  e.bytes(spk.bytes());
  e.bytes(client_sig.bytes());
  e.bytes(st_ct);
  e.boolean(has_wal);
  e.u32(static_cast<uint32_t>(wal_items.size()));
  for (const auto& it : wal_items) e.bytes(it);
  e.bytes(claim_st_ct);
  e.bytes(claim_outp_ct);
  e.boolean(claim_sigma.has_value());
  if (claim_sigma) {
    wire::Encoder se;
    claim_sigma->encode(se);
    e.nested(se.out);
  }
  put_boxpk(e, epk);
  return e.out;
}

WrapperInput WrapperInput::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.wrapper-input");
  WrapperInput w;
  uint32_t op = d.u32();
  if (op > static_cast<uint32_t>(Op::claim_output)) fail(Error::Code::decode, "bad wrapper op");
  w.op = static_cast<Op>(op);
  w.cid = Digest::from_bytes(d.bytes());
  w.inp_ct = d.bytes();
  w.spk = VerifyKey::from_bytes(d.bytes());
  w.client_sig = Signature::from_bytes(d.bytes());
  w.st_ct = d.bytes();
  w.has_wal = d.boolean();
  uint32_t n = d.u32();
  for (uint32_t i = 0; i < n; i++) w.wal_items.push_back(d.bytes());
  w.claim_st_ct = d.bytes();
  w.claim_outp_ct = d.bytes();
  if (d.boolean()) {
    Bytes sb = d.bytes();
    wire::Decoder sd(sb);
    w.claim_sigma = SigmaBundle::decode(sd);
    sd.expect_done();
  }
  w.epk = get_boxpk(d);
  d.expect_done();
  return w;
}

Bytes client_sig_payload(const Digest& cid, ByteView inp_ct) {
  wire::Encoder e;
  e.tag("ekiden.client-sig");
  e.bytes(cid.bytes());
  e.bytes(inp_ct);
  return e.out;
}

Bytes seal(uint64_t epoch, ByteView ct) {
  wire::Encoder e;
  e.tag("ekiden.sealed");
  e.u64(epoch);
  e.bytes(ct);
  return e.out;
}

std::pair<uint64_t, Bytes> unseal(ByteView sealed) {
  wire::Decoder d(sealed);
  d.tag("ekiden.sealed");
  uint64_t epoch = d.u64();
  Bytes ct = d.bytes();
  d.expect_done();
  return {epoch, std::move(ct)};
}

Bytes ClientInput::encoded() const {
  wire::Encoder e;
  e.tag("ekiden.client-input");
  e.bytes(payload);
  e.u64(seq);
  return e.out;
}

ClientInput ClientInput::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.client-input");
  ClientInput c;
  c.payload = d.bytes();
  c.seq = d.u64();
  d.expect_done();
  return c;
}

// --------------------------------------------------------------------------

Bytes GrantRecord::encoded() const {
  wire::Encoder e;
  e.tag("ekiden.km-grant");
  e.u32(node_id);
  e.u64(epoch);
  e.bytes(grant_tag.bytes());
  return e.out;
}

GrantRecord GrantRecord::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.km-grant");
  GrantRecord g;
  g.node_id = d.u32();
  g.epoch = d.u64();
  g.grant_tag = Digest::from_bytes(d.bytes());
  d.expect_done();
  return g;
}

Bytes ConfirmRecord::encoded() const {
  wire::Encoder e;
  e.tag("ekiden.km-confirm");
  e.bytes(cid.bytes());
  e.u64(epoch);
  e.bytes(tag.bytes());
  return e.out;
}

ConfirmRecord ConfirmRecord::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.km-confirm");
  ConfirmRecord c;
  c.cid = Digest::from_bytes(d.bytes());
  c.epoch = d.u64();
  c.tag = Digest::from_bytes(d.bytes());
  d.expect_done();
  return c;
}

Bytes CommitteeRecord::encoded() const {
  wire::Encoder e;
  e.tag("ekiden.km-committee");
  e.u64(epoch);
  e.u32(n);
  e.u32(f_milli);
  return e.out;
}

CommitteeRecord CommitteeRecord::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.km-committee");
  CommitteeRecord c;
  c.epoch = d.u64();
  c.n = d.u32();
  c.f_milli = d.u32();
  d.expect_done();
  return c;
}

crypto::Digest grants_entry_id() {
  Bytes b = to_bytes("ekiden.keymgr.grants");
  return crypto::sha256(ByteView(b.data(), b.size()));
}

crypto::Digest confirm_entry_id() {
  Bytes b = to_bytes("ekiden.keymgr.confirm");
  return crypto::sha256(ByteView(b.data(), b.size()));
}

crypto::Digest committee_entry_id() {
  Bytes b = to_bytes("ekiden.keymgr.committee");
  return crypto::sha256(ByteView(b.data(), b.size()));
}

}  // namespace ekiden::records
