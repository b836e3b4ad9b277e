#include "ekiden/contracts.hpp"

#include <algorithm>

namespace ekiden::contracts {

namespace {

const Bytes kAbsent = to_bytes("ekiden.absent");

crypto::Digest value_hash(const std::optional<Bytes>& v) {
  return crypto::sha256(v ? ByteView(v->data(), v->size()) : ByteView(kAbsent.data(), kAbsent.size()));
}

uint64_t read_u64(const Bytes& b) {
  if (b.size() != 8) fail(Error::Code::decode, "bad u64 state value");
  uint64_t v = 0;
  for (uint8_t byte : b) v = (v << 8) | byte;
  return v;
}

Bytes write_u64(uint64_t v) {
  Bytes b(8);
  for (int i = 0; i < 8; i++) b[i] = static_cast<uint8_t>(v >> (8 * (7 - i)));
  return b;
}

}  // namespace

void State::encode(wire::Encoder& e) const {
  e.tag("ekiden.state");
  e.u32(static_cast<uint32_t>(records.size()));
  for (const auto& [k, v] : records) {
    e.bytes(k);
    e.bytes(v);
  }
}

State State::decode(wire::Decoder& d) {
  d.tag("ekiden.state");
  uint32_t n = d.u32();
  State st;
  for (uint32_t i = 0; i < n; i++) {
    Bytes k = d.bytes();
    Bytes v = d.bytes();
    st.records.emplace(std::move(k), std::move(v));
  }
  return st;
}

Bytes State::encoded() const {
  wire::Encoder e;
  encode(e);
  return e.out;
}

State State::from_bytes(ByteView b) {
  wire::Decoder d(b);
  State st = decode(d);
  d.expect_done();
  return st;
}

void StateDiff::encode(wire::Encoder& e) const {
  e.tag("ekiden.diff");
  e.u32(static_cast<uint32_t>(edits.size()));
  for (const auto& ed : edits) {
    e.bytes(ed.key);
    e.bytes(ed.old_value_hash.bytes());
    e.boolean(ed.remove);
    e.bytes(ed.new_value);
  }
}

StateDiff StateDiff::decode(wire::Decoder& d) {
  d.tag("ekiden.diff");
  uint32_t n = d.u32();
  StateDiff out;
  for (uint32_t i = 0; i < n; i++) {
    Edit ed;
    ed.key = d.bytes();
    ed.old_value_hash = crypto::Digest::from_bytes(d.bytes());
    ed.remove = d.boolean();
    ed.new_value = d.bytes();
    out.edits.push_back(std::move(ed));
  }
  return out;
}

Bytes StateDiff::encoded(size_t pad_to) const {
  wire::Encoder e;
  encode(e);
  Bytes out = e.out;
  if (pad_to > 0) {
    // pad with an explicit trailing field so the total rounds up to the class
    size_t target = (out.size() + 4 + pad_to - 1) / pad_to * pad_to;
    size_t pad = target - out.size() - 4;
    wire::Encoder tail;
    tail.bytes(Bytes(pad, 0));
    out.insert(out.end(), tail.out.begin(), tail.out.end());
  }
  return out;
}

StateDiff StateDiff::from_bytes(ByteView b) {
  wire::Decoder d(b);
  StateDiff out = decode(d);
  if (!d.done()) (void)d.bytes();  // padding field
  d.expect_done();
  return out;
}

StateDiff diff(const State& st_new, const State& st_old) {
  StateDiff out;
  auto it_new = st_new.records.begin();
  auto it_old = st_old.records.begin();
  while (it_new != st_new.records.end() || it_old != st_old.records.end()) {
    if (it_old == st_old.records.end() ||
        (it_new != st_new.records.end() && it_new->first < it_old->first)) {
      out.edits.push_back({it_new->first, value_hash(std::nullopt), false, it_new->second});
      ++it_new;
    } else if (it_new == st_new.records.end() || it_old->first < it_new->first) {
      out.edits.push_back({it_old->first, value_hash(it_old->second), true, {}});
      ++it_old;
    } else {
      if (it_new->second != it_old->second)
        out.edits.push_back({it_new->first, value_hash(it_old->second), false, it_new->second});
      ++it_new;
      ++it_old;
    }
  }
  return out;
}

State apply(const State& st, const StateDiff& d) {
  State out = st;
  for (const auto& ed : d.edits) {
    auto it = out.records.find(ed.key);
    std::optional<Bytes> current;
    if (it != out.records.end()) current = it->second;
    if (value_hash(current) != ed.old_value_hash)
      fail(Error::Code::corrupt_log, "diff base mismatch at key " + hex_encode(ed.key));
    if (ed.remove) {
      if (it != out.records.end()) out.records.erase(it);
    } else {
      out.records[ed.key] = ed.new_value;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void ContractCode::encode(wire::Encoder& e) const {
  e.tag("ekiden.contract");
  e.str(kind);
  e.u64(param);
}

ContractCode ContractCode::decode(wire::Decoder& d) {
  d.tag("ekiden.contract");
  ContractCode c;
  c.kind = d.str();
  c.param = d.u64();
  return c;
}

Bytes ContractCode::encoded() const {
  wire::Encoder e;
  encode(e);
  return e.out;
}

ContractCode ContractCode::from_bytes(ByteView b) {
  wire::Decoder d(b);
  ContractCode c = decode(d);
  d.expect_done();
  return c;
}

void Output::encode(wire::Encoder& e) const {
  e.tag("ekiden.output");
  e.boolean(ok);
  e.str(text);
  e.u64(value);
}

Bytes Output::encoded() const {
  wire::Encoder e;
  encode(e);
  return e.out;
}

Output Output::from_bytes(ByteView b) {
  wire::Decoder d(b);
  d.tag("ekiden.output");
  Output o;
  o.ok = d.boolean();
  o.text = d.str();
  o.value = d.u64();
  d.expect_done();
  return o;
}

// Token -----------------------------------------------------------------------

namespace {

Bytes minted_key() { return to_bytes("minted"); }

Bytes account_key(const crypto::Digest& account) {
  Bytes k = to_bytes("acct.");
  Bytes a = account.bytes();
  k.insert(k.end(), a.begin(), a.end());
  return k;
}

Bytes token_input(const std::string& op, const crypto::Digest& to, uint64_t amount, uint64_t seq) {
  wire::Encoder e;
  e.tag("token.inp");
  e.str(op);
  e.bytes(to.bytes());
  e.u64(amount);
  e.u64(seq);
  return e.out;
}

ContractResult token_apply(const State& st, ByteView inp, const crypto::VerifyKey& caller) {
  wire::Decoder d(inp);
  d.tag("token.inp");
  std::string op = d.str();
  crypto::Digest to = crypto::Digest::from_bytes(d.bytes());
  uint64_t amount = d.u64();
  (void)d.u64();  // client sequence number, semantics-free

  State next = st;
  crypto::Digest self = token_account(caller);

  if (op == "mint") {
    if (st.records.count(minted_key())) return {st, Output{false, "already minted", 0}.encoded()};
    next.records[minted_key()] = write_u64(1);
    next.records[account_key(self)] = write_u64(amount);
    return {next, Output{true, "minted", amount}.encoded()};
  }
  if (op == "transfer") {
    auto from_it = next.records.find(account_key(self));
    uint64_t have = from_it == next.records.end() ? 0 : read_u64(from_it->second);
    if (have < amount) return {st, Output{false, "insufficient funds", have}.encoded()};
    next.records[account_key(self)] = write_u64(have - amount);
    // recipient balance read after the debit so self-transfers net to zero
    uint64_t their = 0;
    auto to_it = next.records.find(account_key(to));
    if (to_it != next.records.end()) their = read_u64(to_it->second);
    next.records[account_key(to)] = write_u64(their + amount);
    return {next, Output{true, "transferred", amount}.encoded()};
  }
  if (op == "get_balance") {
    auto it = st.records.find(account_key(self));
    uint64_t have = it == st.records.end() ? 0 : read_u64(it->second);
    return {st, Output{true, "balance", have}.encoded()};
  }
  return {st, Output{false, "unknown op", 0}.encoded()};
}

ContractResult counter_apply(uint64_t budget, const State& st, ByteView inp,
                             const crypto::VerifyKey& caller) {
  (void)caller;
  wire::Decoder d(inp);
  d.tag("counter.inp");
  (void)d.u64();  // seq

  uint64_t count = counter_value(st);
  if (count >= budget) return {st, Output{false, "budget exhausted", count}.encoded()};
  State next = st;
  next.records[to_bytes("count")] = write_u64(count + 1);
  return {next, Output{true, "answered", count + 1}.encoded()};
}

}  // namespace

Bytes token_mint(uint64_t amount, uint64_t seq) {
  return token_input("mint", crypto::Digest{}, amount, seq);
}

Bytes token_transfer(const crypto::Digest& to_account, uint64_t amount, uint64_t seq) {
  return token_input("transfer", to_account, amount, seq);
}

Bytes token_get_balance(uint64_t seq) {
  return token_input("get_balance", crypto::Digest{}, 0, seq);
}

crypto::Digest token_account(const crypto::VerifyKey& spk) {
  wire::Encoder e;
  e.tag("token.account");
  e.bytes(ByteView(spk.v.data(), spk.v.size()));
  return crypto::hash_bytes(ByteView(e.out.data(), e.out.size()));
}

Bytes counter_query(uint64_t seq) {
  wire::Encoder e;
  e.tag("counter.inp");
  e.u64(seq);
  return e.out;
}

uint64_t counter_value(const State& st) {
  auto it = st.records.find(to_bytes("count"));
  return it == st.records.end() ? 0 : read_u64(it->second);
}

std::map<std::string, uint64_t> token_balances(const State& st) {
  std::map<std::string, uint64_t> out;
  Bytes prefix = to_bytes("acct.");
  for (const auto& [k, v] : st.records) {
    if (k.size() <= prefix.size() || !std::equal(prefix.begin(), prefix.end(), k.begin())) continue;
    out[hex_encode(ByteView(k.data() + prefix.size(), k.size() - prefix.size()))] = read_u64(v);
  }
  return out;
}

ContractProgram resolve(const ContractCode& code) {
  ContractProgram p;
  p.code = code;
  crypto::Digest h = crypto::sha256(ByteView{});
  if (code.kind == "token") {
    p.zero_state = State{};
    p.apply = token_apply;
    // transfers touch exactly two account records
    StateDiff probe;
    probe.edits.push_back({account_key(h), h, false, write_u64(0)});
    probe.edits.push_back({account_key(h), h, false, write_u64(0)});
    p.diff_pad_class = probe.encoded().size() + 8;
  } else if (code.kind == "counter") {
    p.zero_state = State{};
    uint64_t budget = code.param;
    p.apply = [budget](const State& st, ByteView inp, const crypto::VerifyKey& caller) {
      return counter_apply(budget, st, inp, caller);
    };
    StateDiff probe;
    probe.edits.push_back({to_bytes("count"), h, false, write_u64(0)});
    p.diff_pad_class = probe.encoded().size() + 8;
  } else {
    fail(Error::Code::not_found, "unknown contract kind: " + code.kind);
  }
  return p;
}

}  // namespace ekiden::contracts
