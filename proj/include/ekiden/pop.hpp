#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ekiden/bytes.hpp"
#include "ekiden/crypto.hpp"
#include "ekiden/ledger.hpp"
#include "ekiden/rng.hpp"

namespace ekiden::pop {

// Simulated time. Timestamps are generated at request time; an adversary may
// delay their delivery but never forge values ("no-earlier-than").
struct SimClock {
  double now = 0.0;
  void advance(double dt) { now += dt; }
};

struct PowBlock {
  crypto::Digest prev;
  std::vector<Bytes> payload;
  uint64_t nonce = 0;
  uint32_t difficulty = 0;  // required leading zero bits
  double mined_at = 0.0;

  Bytes header_bytes() const;  // canonical bytes that get hashed
  crypto::Digest hash() const;
};

bool meets_difficulty(const crypto::Digest& h, uint32_t bits);

using Chain = std::vector<PowBlock>;

// Extends the chain with one block carrying the given payload; grinds the
// nonce until the difficulty target is met. Deterministic given rng.
PowBlock mine_block(const crypto::Digest& prev, std::vector<Bytes> payload, uint32_t difficulty,
                    Rng& rng, double mined_at);

// One stochastic mining step: samples the next block arrival of a miner that
// owns `power_fraction` of the network (rate power/tau), advances the clock
// and appends the block. power 0 never mines.
struct Miner {
  double power_fraction = 1.0;
  double tau = 1.0;
  uint32_t difficulty = 8;

  // Returns false (and leaves chain/clock untouched) when power is zero.
  bool mine_step(Chain& chain, Rng& rng, SimClock& clock, std::vector<Bytes> payload = {}) const;
};

struct PopParams {
  uint32_t n_c = 10;       // confirmations required
  double tau = 1.0;        // expected block interval, seconds
  double epsilon = 2.0;    // slackness factor, > 1
  uint32_t difficulty = 8; // delta(CB)
};

struct PopProof {
  Chain subchain;       // CB first, then B_1..B_n
  size_t include_index; // i: position of the block containing (m, r), 1-based
};

// Prover: assembles the subchain from the checkpoint through B_{i+n_c}.
// Returns nullopt while (m, r) lacks n_c confirmations.
std::optional<PopProof> prove_publication(const Bytes& m, const Bytes& r, const Chain& chain_view,
                                          const crypto::Digest& checkpoint_hash, uint32_t n_c);

enum class PopVerdict {
  accept,
  invalid_chain,
  message_missing,
  insufficient_confirmations,
  low_difficulty,
  too_slow,
};

const char* to_string(PopVerdict v);

// Verifier state lives inside a contract TEE: a checkpoint block plus the
// timestamp/nonce drawn when the publication was requested.
struct PopVerifier {
  PowBlock checkpoint;
  double t1 = 0.0;
  Bytes nonce;

  // Reads t1 (subject to an adversarial delivery delay that burns window
  // time before the nonce is released) and draws a fresh nonce.
  void start(SimClock& clock, Rng& rng, double t1_delivery_delay = 0.0);

  // Timed acceptance: valid links, contains (m, r), >= n_c confirmations,
  // every difficulty >= delta(CB), and t2 - t1 < (n - i) * tau * epsilon.
  // On accept the checkpoint advances to B_n.
  PopVerdict verify(const Bytes& m, const PopProof& proof, const PopParams& params,
                    SimClock& clock);
};

// (m, r) payload as placed into a block.
Bytes publication_payload(const Bytes& m, const Bytes& r);

struct RateEstimate {
  double false_reject_rate = 0.0;
  double forgery_success_rate = 0.0;
  uint64_t trials = 0;
};

// Monte Carlo over the mining model. Honest runs measure rejections of real
// publications on the main chain; adversarial runs isolate the verifier with
// an attacker-only chain mined at power p. Common random numbers: the trial
// index seeds each trial, so sweeps over epsilon share arrival draws.
// t1_delay models an adversary delaying the verifier's first clock read,
// which burns window time for honest and forged proofs alike.
RateEstimate estimate_rates(const PopParams& params, double attacker_power, uint64_t trials,
                            Rng& rng, double t1_delay = 0.0);

// Ledger backend that additionally packages every accepted item into a
// simulated PoW block, giving provers a chain to cite.
class PowSimLedger : public ledger::Ledger {
 public:
  PowSimLedger(ledger::SuccFn succ, uint32_t difficulty, SimClock* clock, Rng rng);

  const Chain& chain() const { return chain_; }

 protected:
  void on_accepted(const ledger::EntryId& id, const Bytes& payload) override;

 private:
  uint32_t difficulty_;
  SimClock* clock_;
  Rng rng_;
  Chain chain_;
};

}  // namespace ekiden::pop
