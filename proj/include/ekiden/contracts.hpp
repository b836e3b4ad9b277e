#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ekiden/bytes.hpp"
#include "ekiden/crypto.hpp"
#include "ekiden/wire.hpp"

namespace ekiden::contracts {

// Contract state is a flat key -> value map with canonical key ordering, so
// hashing and diffing are deterministic.
struct State {
  std::map<Bytes, Bytes> records;

  bool operator==(const State&) const = default;
  void encode(wire::Encoder& e) const;
  static State decode(wire::Decoder& d);
  Bytes encoded() const;
  static State from_bytes(ByteView b);
};

// One record edit: the old-value hash pins the base state so applying a diff
// to the wrong state is detected rather than silently diverging.
struct Edit {
  Bytes key;
  crypto::Digest old_value_hash;
  bool remove = false;
  Bytes new_value;  // empty when remove

  bool operator==(const Edit&) const = default;
};

struct StateDiff {
  std::vector<Edit> edits;  // sorted by key

  bool empty() const { return edits.empty(); }
  bool operator==(const StateDiff&) const = default;
  void encode(wire::Encoder& e) const;
  static StateDiff decode(wire::Decoder& d);
  // Canonical encoding, zero-padded up to pad_to bytes (0 = no padding).
  Bytes encoded(size_t pad_to = 0) const;
  static StateDiff from_bytes(ByteView b);
};

// apply(st, diff(st_new, st_old)) == st_new whenever st == st_old.
StateDiff diff(const State& st_new, const State& st_old);
State apply(const State& st, const StateDiff& d);  // throws on base mismatch

// ---------------------------------------------------------------------------
// Contract programs. Pure transition functions (st_prev, inp, caller) ->
// (st_new, outp); the caller is identified by its signature verification key.

struct ContractResult {
  State st;
  Bytes outp;
};

using TransitionFn =
    std::function<ContractResult(const State& st, ByteView inp, const crypto::VerifyKey& caller)>;

// Contract code as deployed: a kind plus parameters; cid = hash of this.
struct ContractCode {
  std::string kind;  // "token" | "counter"
  uint64_t param = 0;

  bool operator==(const ContractCode&) const = default;
  void encode(wire::Encoder& e) const;
  static ContractCode decode(wire::Decoder& d);
  Bytes encoded() const;
  static ContractCode from_bytes(ByteView b);
};

struct ContractProgram {
  ContractCode code;
  State zero_state;
  TransitionFn apply;
  // Diff ciphertext padding class in bytes; per-op diffs are padded up to a
  // multiple of this so same-shape operations are indistinguishable.
  size_t diff_pad_class = 0;
};

// Resolves built-in contracts. Throws Error::not_found for unknown kinds.
ContractProgram resolve(const ContractCode& code);

// Token inputs/outputs -------------------------------------------------------
// inp record tags: token.mint (amount -> caller), token.transfer (to, amount),
// token.get_balance. Every input carries a client sequence number so equal
// logical inputs still produce distinct ciphertexts.

Bytes token_mint(uint64_t amount, uint64_t seq);
Bytes token_transfer(const crypto::Digest& to_account, uint64_t amount, uint64_t seq);
Bytes token_get_balance(uint64_t seq);
crypto::Digest token_account(const crypto::VerifyKey& spk);

// Counter input: one query per call; refused once the on-chain budget is
// spent. The budget is the ContractCode param.
Bytes counter_query(uint64_t seq);

// Outputs are (ok, text, value) records.
struct Output {
  bool ok = false;
  std::string text;
  uint64_t value = 0;

  void encode(wire::Encoder& e) const;
  static Output from_bytes(ByteView b);
  Bytes encoded() const;
};

// Token/counter state probes used by audits and tests.
std::map<std::string, uint64_t> token_balances(const State& st);
uint64_t counter_value(const State& st);

}  // namespace ekiden::contracts
