#include "ekiden/pop.hpp"

#include <cstring>

#include "ekiden/wire.hpp"

namespace ekiden::pop {

Bytes PowBlock::header_bytes() const {
  wire::Encoder e;
  e.tag("ekiden.pow-block");
  e.bytes(prev.bytes());
  e.u32(static_cast<uint32_t>(payload.size()));
  for (const auto& p : payload) e.bytes(p);
  e.u64(nonce);
  e.u32(difficulty);
  uint64_t ts_bits;
  static_assert(sizeof ts_bits == sizeof mined_at);
  std::memcpy(&ts_bits, &mined_at, sizeof ts_bits);
  e.u64(ts_bits);
  return e.out;
}

crypto::Digest PowBlock::hash() const {
  Bytes h = header_bytes();
  return crypto::hash_bytes(ByteView(h.data(), h.size()));
}

bool meets_difficulty(const crypto::Digest& h, uint32_t bits) {
  uint32_t full = bits / 8, rem = bits % 8;
  if (full > h.v.size()) return false;
  for (uint32_t i = 0; i < full; i++)
    if (h.v[i] != 0) return false;
  if (rem > 0 && full < h.v.size() && (h.v[full] >> (8 - rem)) != 0) return false;
  return true;
}

PowBlock mine_block(const crypto::Digest& prev, std::vector<Bytes> payload, uint32_t difficulty,
                    Rng& rng, double mined_at) {
  PowBlock b;
  b.prev = prev;
  b.payload = std::move(payload);
  b.difficulty = difficulty;
  b.mined_at = mined_at;
  b.nonce = rng.next_u64();
  while (!meets_difficulty(b.hash(), difficulty)) b.nonce++;
  return b;
}

bool Miner::mine_step(Chain& chain, Rng& rng, SimClock& clock, std::vector<Bytes> payload) const {
  if (power_fraction <= 0.0) return false;
  if (chain.empty()) fail(Error::Code::bad_argument, "mine_step needs a genesis block");
  clock.advance(rng.exponential(tau / power_fraction));
  chain.push_back(mine_block(chain.back().hash(), std::move(payload), difficulty, rng, clock.now));
  return true;
}

Bytes publication_payload(const Bytes& m, const Bytes& r) {
  wire::Encoder e;
  e.tag("ekiden.pop-msg");
  e.bytes(m);
  e.bytes(r);
  return e.out;
}

std::optional<PopProof> prove_publication(const Bytes& m, const Bytes& r, const Chain& chain_view,
                                          const crypto::Digest& checkpoint_hash, uint32_t n_c) {
  size_t cb = chain_view.size();
  for (size_t i = 0; i < chain_view.size(); i++) {
    if (chain_view[i].hash() == checkpoint_hash) {
      cb = i;
      break;
    }
  }
  if (cb == chain_view.size()) return std::nullopt;

  Bytes want = publication_payload(m, r);
  size_t include = chain_view.size();
  for (size_t i = cb + 1; i < chain_view.size(); i++) {
    for (const auto& p : chain_view[i].payload) {
      if (p == want) {
        include = i;
        break;
      }
    }
    if (include != chain_view.size()) break;
  }
  if (include == chain_view.size()) return std::nullopt;
  if (chain_view.size() - 1 - include < n_c) return std::nullopt;  // not yet confirmed

  PopProof proof;
  // subchain from CB to B_{i+n_c} inclusive
  for (size_t i = cb; i <= include + n_c; i++) proof.subchain.push_back(chain_view[i]);
  proof.include_index = include - cb;
  return proof;
}

const char* to_string(PopVerdict v) {
  switch (v) {
    case PopVerdict::accept: return "accept";
    case PopVerdict::invalid_chain: return "invalid_chain";
    case PopVerdict::message_missing: return "message_missing";
    case PopVerdict::insufficient_confirmations: return "insufficient_confirmations";
    case PopVerdict::low_difficulty: return "low_difficulty";
    case PopVerdict::too_slow: return "too_slow";
  }
  return "?";
}

void PopVerifier::start(SimClock& clock, Rng& rng, double t1_delivery_delay) {
  t1 = clock.now;                   // timestamp generated at request time
  clock.advance(t1_delivery_delay); // delayed delivery burns window time
  nonce = rng.bytes(16);
}

PopVerdict PopVerifier::verify(const Bytes& m, const PopProof& proof, const PopParams& params,
                               SimClock& clock) {
  double t2 = clock.now;

  if (proof.subchain.empty() || proof.subchain.front().hash() != checkpoint.hash())
    return PopVerdict::invalid_chain;
  for (size_t i = 0; i < proof.subchain.size(); i++) {
    const PowBlock& b = proof.subchain[i];
    if (!meets_difficulty(b.hash(), b.difficulty)) return PopVerdict::invalid_chain;
    if (i > 0 && b.prev != proof.subchain[i - 1].hash()) return PopVerdict::invalid_chain;
  }

  Bytes want = publication_payload(m, nonce);
  size_t i = 0;
  for (size_t k = 1; k < proof.subchain.size(); k++) {
    for (const auto& p : proof.subchain[k].payload) {
      if (p == want) {
        i = k;
        break;
      }
    }
    if (i != 0) break;
  }
  if (i == 0) return PopVerdict::message_missing;

  size_t n = proof.subchain.size() - 1;
  if (n - i < params.n_c) return PopVerdict::insufficient_confirmations;

  for (const PowBlock& b : proof.subchain)
    if (b.difficulty < checkpoint.difficulty) return PopVerdict::low_difficulty;

  if (t2 - t1 < double(n - i) * params.tau * params.epsilon) {
    checkpoint = proof.subchain.back();
    return PopVerdict::accept;
  }
  return PopVerdict::too_slow;
}

// ---------------------------------------------------------------------------

RateEstimate estimate_rates(const PopParams& params, double attacker_power, uint64_t trials,
                            Rng& rng, double t1_delay) {
  if (trials == 0) fail(Error::Code::bad_argument, "trials must be >= 1");
  RateEstimate out;
  out.trials = trials;
  uint64_t rejects = 0, forgeries = 0;
  Rng base = rng.fork("pop.trials");
  Bytes m = to_bytes("pop.item");

  for (uint64_t t = 0; t < trials; t++) {
    Rng tr = base.fork(std::to_string(t));

    // Honest run: the whole network (rate 1/tau) extends the main chain. The
    // published message joins the block template in flight, so the including
    // block is stamped at submission time and the timed window covers its
    // n_c confirmations.
    {
      SimClock clock;
      Rng hr = tr.fork("honest");
      PowBlock cb = mine_block(crypto::Digest{}, {}, params.difficulty, hr, 0.0);
      Chain chain = {cb};
      PopVerifier verifier{cb};
      verifier.start(clock, hr, t1_delay);
      Bytes payload = publication_payload(m, verifier.nonce);
      chain.push_back(
          mine_block(cb.hash(), {payload}, params.difficulty, hr, clock.now));
      Miner network{1.0, params.tau, params.difficulty};
      for (uint32_t c = 0; c < params.n_c; c++) network.mine_step(chain, hr, clock);
      auto proof = prove_publication(m, verifier.nonce, chain, cb.hash(), params.n_c);
      if (!proof || verifier.verify(m, *proof, params, clock) != PopVerdict::accept) rejects++;
    }

    // Forgery run: an isolated verifier fed an attacker-only chain. The
    // attacker learns the nonce at t1 and must mine the including block and
    // every confirmation itself at rate p/tau.
    if (attacker_power > 0.0) {
      SimClock clock;
      Rng ar = tr.fork("attack");
      PowBlock cb = mine_block(crypto::Digest{}, {}, params.difficulty, ar, 0.0);
      Chain chain = {cb};
      PopVerifier verifier{cb};
      verifier.start(clock, ar, t1_delay);
      Bytes payload = publication_payload(m, verifier.nonce);
      Miner attacker{attacker_power, params.tau, params.difficulty};
      attacker.mine_step(chain, ar, clock, {payload});
      for (uint32_t c = 0; c < params.n_c; c++) attacker.mine_step(chain, ar, clock);
      auto proof = prove_publication(m, verifier.nonce, chain, cb.hash(), params.n_c);
      if (proof && verifier.verify(m, *proof, params, clock) == PopVerdict::accept) forgeries++;
    }
  }

  out.false_reject_rate = double(rejects) / double(trials);
  out.forgery_success_rate = double(forgeries) / double(trials);
  return out;
}

// ---------------------------------------------------------------------------

PowSimLedger::PowSimLedger(ledger::SuccFn succ, uint32_t difficulty, SimClock* clock, Rng rng)
    : Ledger(std::move(succ)), difficulty_(difficulty), clock_(clock), rng_(std::move(rng)) {
  chain_.push_back(mine_block(crypto::Digest{}, {}, difficulty_, rng_, clock_ ? clock_->now : 0.0));
}

void PowSimLedger::on_accepted(const ledger::EntryId& id, const Bytes& payload) {
  wire::Encoder e;
  e.tag("ekiden.pow-item");
  e.bytes(id.bytes());
  e.bytes(payload);
  chain_.push_back(mine_block(chain_.back().hash(), {e.out}, difficulty_, rng_,
                              clock_ ? clock_->now : 0.0));
}

}  // namespace ekiden::pop
