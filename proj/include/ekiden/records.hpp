#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ekiden/bytes.hpp"
#include "ekiden/contracts.hpp"
#include "ekiden/crypto.hpp"
#include "ekiden/wire.hpp"

// Canonical protocol records. Everything that crosses a trust boundary --
// ledger items, attested enclave outputs, wrapper inputs -- is one of these,
// so digests and signatures are bit-stable across modules.
namespace ekiden::records {

using crypto::Digest;
using crypto::Signature;
using crypto::VerifyKey;

using BoxPk = std::array<uint8_t, crypto::kBoxKeySize>;

// Identity of the TEE program: the contract wrapper specialized to one
// contract. Everything the platform attests is bound to this hash.
Digest wrapper_program_hash(const contracts::ContractCode& code);

// Message actually signed by the platform key: (program, outp1).
Bytes attest_payload(const Digest& program_hash, ByteView outp1);

// ---------------------------------------------------------------------------
// Enclave outputs (outp1 halves).

// Result of the wrapper's create call.
struct CreateResult {
  contracts::ContractCode code;
  Digest cid;
  Bytes st0_ct;
  BoxPk pk_in{};
  uint64_t epoch = 0;

  void encode(wire::Encoder& e) const;
  static CreateResult from_bytes(ByteView b);
  Bytes encoded() const;
};

// The bound tuple driving atomic delivery. h_inp/h_outp/spk hold one segment
// per request (several in batch mode). st_ct is the new full state ciphertext
// or the encrypted diff; empty for read-only transitions that touch no state.
struct AtomDeliver {
  Digest cid;
  std::vector<Digest> h_inp;
  Digest h_prev;
  Bytes st_ct;
  bool is_diff = false;
  bool is_empty = false;
  std::vector<Digest> h_outp;
  std::vector<VerifyKey> spk;
  uint64_t epoch = 0;
  BoxPk pk_in{};  // current input key, republished with every transition

  void encode(wire::Encoder& e) const;
  static AtomDeliver from_bytes(ByteView b);
  Bytes encoded() const;
};

// sigma as carried next to a transition: the attestation plus every bound
// field except st_ct (which travels beside it).
struct SigmaBundle {
  Signature sig_tee;
  std::vector<Digest> h_inp;
  Digest h_prev;
  std::vector<Digest> h_outp;
  std::vector<VerifyKey> spk;
  uint64_t epoch = 0;
  BoxPk pk_in{};
  bool is_diff = false;
  bool is_empty = false;

  AtomDeliver to_atom(const Digest& cid, const Bytes& st_ct) const;
  static SigmaBundle from_atom(const AtomDeliver& a, const Signature& sig);

  void encode(wire::Encoder& e) const;
  static SigmaBundle decode(wire::Decoder& d);
};

// Output release returned by claim-output; out_ct is under the client's epk.
struct OutputRelease {
  Digest cid;
  Digest h_outp;
  Bytes out_ct;

  void encode(wire::Encoder& e) const;
  static OutputRelease from_bytes(ByteView b);
  Bytes encoded() const;
};

// Ack for a batched submit.
struct SubmitAck {
  Digest cid;
  Digest h_inp;
  uint32_t batch_size = 0;

  void encode(wire::Encoder& e) const;
  static SubmitAck from_bytes(ByteView b);
  Bytes encoded() const;
};

// ---------------------------------------------------------------------------
// Ledger items.

struct GenesisItem {
  contracts::ContractCode code;
  Digest cid;
  Bytes st0_ct;
  BoxPk pk_in{};
  uint64_t epoch = 0;
  Signature sig_tee;  // over attest_payload(wrapper hash, CreateResult)

  CreateResult to_create_result() const;
  Bytes encoded() const;
  static GenesisItem from_bytes(ByteView b);
};

struct TransitionItem {
  Bytes st_ct;
  SigmaBundle sigma;

  Bytes encoded() const;
  static TransitionItem from_bytes(ByteView b);
};

enum class ItemKind { genesis, transition, system };
ItemKind item_kind(ByteView item);

// Digest of the state ciphertext an item carries; the chain head that the
// next transition's h_prev must equal.
Digest item_state_hash(ByteView item);

// ---------------------------------------------------------------------------
// Wrapper (resume) inputs.

struct WrapperInput {
  enum class Op { create, request, submit, commit_batch, claim_output };
  Op op = Op::create;
  Digest cid;

  // request/submit
  Bytes inp_ct;
  VerifyKey spk;
  Signature client_sig;
  Bytes st_ct;  // request only: full state ciphertext read from the chain

  // commit_batch: write-ahead log segment (checkpoint first), empty if the
  // node expects the enclave cache to be warm
  bool has_wal = false;
  std::vector<Bytes> wal_items;

  // claim_output
  Bytes claim_st_ct;
  Bytes claim_outp_ct;
  std::optional<SigmaBundle> claim_sigma;
  BoxPk epk{};

  Bytes encoded() const;
  static WrapperInput from_bytes(ByteView b);
};

// Client signature payload: sign(ssk, (cid, inp_ct)).
Bytes client_sig_payload(const Digest& cid, ByteView inp_ct);

// Epoch-stamped ciphertext framing. The stamp names the epoch whose derived
// keys sealed the payload; it is public metadata (epochs are public time).
Bytes seal(uint64_t epoch, ByteView ct);
std::pair<uint64_t, Bytes> unseal(ByteView sealed);

// Client input plaintext: (payload, seq) under pk_in.
struct ClientInput {
  Bytes payload;
  uint64_t seq = 0;

  Bytes encoded() const;
  static ClientInput from_bytes(ByteView b);
};

// ---------------------------------------------------------------------------
// Key-manager replica records, synchronized through dedicated ledger entries.

struct GrantRecord {
  uint32_t node_id = 0;
  uint64_t epoch = 0;
  Digest grant_tag;

  Bytes encoded() const;
  static GrantRecord from_bytes(ByteView b);
};

struct ConfirmRecord {
  Digest cid;
  uint64_t epoch = 0;
  Digest tag;

  Bytes encoded() const;
  static ConfirmRecord from_bytes(ByteView b);
};

struct CommitteeRecord {
  uint64_t epoch = 0;
  uint32_t n = 0;
  uint32_t f_milli = 0;  // breach fraction in thousandths

  Bytes encoded() const;
  static CommitteeRecord from_bytes(ByteView b);
};

crypto::Digest grants_entry_id();
crypto::Digest confirm_entry_id();
crypto::Digest committee_entry_id();

}  // namespace ekiden::records
