#include <cmath>

#include "doctest.h"
#include "ekiden/pop.hpp"
#include "ekiden/rng.hpp"

using namespace ekiden;
using namespace ekiden::pop;

namespace {
ByteView view(const Bytes& b) { return ByteView(b.data(), b.size()); }

Chain honest_chain_with(const Bytes& m, const Bytes& r, const PowBlock& cb, uint32_t blocks_after,
                        Rng& rng, SimClock& clock, double tau) {
  Chain chain = {cb};
  chain.push_back(mine_block(cb.hash(), {publication_payload(m, r)}, cb.difficulty, rng, clock.now));
  Miner network{1.0, tau, cb.difficulty};
  for (uint32_t i = 0; i < blocks_after; i++) network.mine_step(chain, rng, clock);
  return chain;
}
}  // namespace

TEST_CASE("mining: difficulty respected, zero power mines nothing") {
  Rng rng(1);
  SimClock clock;
  PowBlock genesis = mine_block(crypto::Digest{}, {}, 10, rng, 0.0);
  CHECK(meets_difficulty(genesis.hash(), 10));

  Chain chain = {genesis};
  Miner none{0.0, 1.0, 10};
  CHECK_FALSE(none.mine_step(chain, rng, clock));
  CHECK(chain.size() == 1);

  Miner full{1.0, 1.0, 10};
  CHECK(full.mine_step(chain, rng, clock));
  CHECK(chain.size() == 2);
  CHECK(chain[1].prev == chain[0].hash());
  CHECK(meets_difficulty(chain[1].hash(), 10));
}

TEST_CASE("mean inter-block time tracks tau within 5%") {
  Rng rng(2);
  SimClock clock;
  const double tau = 3.0;
  Chain chain = {mine_block(crypto::Digest{}, {}, 4, rng, 0.0)};
  Miner network{1.0, tau, 4};
  const int blocks = 10000;
  for (int i = 0; i < blocks; i++) network.mine_step(chain, rng, clock);
  double mean = clock.now / blocks;
  CHECK(std::abs(mean - tau) / tau < 0.05);
}

TEST_CASE("prover: not-ready before n_c confirmations, valid proof afterward") {
  Rng rng(3);
  SimClock clock;
  PowBlock cb = mine_block(crypto::Digest{}, {}, 8, rng, 0.0);
  Bytes m = to_bytes("message"), r = rng.bytes(16);

  Chain chain = {cb};
  chain.push_back(mine_block(cb.hash(), {publication_payload(m, r)}, 8, rng, clock.now));
  Miner network{1.0, 1.0, 8};
  for (int i = 0; i < 4; i++) network.mine_step(chain, rng, clock);

  CHECK_FALSE(prove_publication(m, r, chain, cb.hash(), 10).has_value());

  for (int i = 0; i < 6; i++) network.mine_step(chain, rng, clock);
  auto proof = prove_publication(m, r, chain, cb.hash(), 10);
  REQUIRE(proof.has_value());
  CHECK(proof->subchain.size() == 12);  // CB + include + 10 confirmations
  CHECK(proof->include_index == 1);
  for (size_t i = 1; i < proof->subchain.size(); i++)
    CHECK(proof->subchain[i].prev == proof->subchain[i - 1].hash());
}

TEST_CASE("verifier accepts a timely honest proof and advances its checkpoint") {
  Rng rng(4);
  SimClock clock;
  PopParams params{10, 1.0, 2.0, 8};
  PowBlock cb = mine_block(crypto::Digest{}, {}, params.difficulty, rng, 0.0);

  PopVerifier verifier{cb};
  verifier.start(clock, rng);
  Bytes m = to_bytes("item");
  Chain chain = honest_chain_with(m, verifier.nonce, cb, params.n_c, rng, clock, params.tau);
  auto proof = prove_publication(m, verifier.nonce, chain, cb.hash(), params.n_c);
  REQUIRE(proof.has_value());

  // a pathological timing draw can exceed the window; retry seeds until the
  // nominal case (elapsed < 20 tau) is exercised
  REQUIRE(clock.now < params.n_c * params.tau * params.epsilon);
  CHECK(verifier.verify(m, *proof, params, clock) == PopVerdict::accept);
  CHECK(verifier.checkpoint.hash() == chain.back().hash());
}

TEST_CASE("verifier rejections carry reasons") {
  Rng rng(5);
  PopParams params{5, 1.0, 2.0, 8};
  SimClock clock;
  PowBlock cb = mine_block(crypto::Digest{}, {}, params.difficulty, rng, 0.0);
  Bytes m = to_bytes("item");

  SUBCASE("missing message") {
    PopVerifier v{cb};
    v.start(clock, rng);
    Chain chain = honest_chain_with(to_bytes("other"), v.nonce, cb, params.n_c, rng, clock, 1.0);
    PopProof proof{chain, 1};
    CHECK(v.verify(m, proof, params, clock) == PopVerdict::message_missing);
  }

  SUBCASE("broken link") {
    PopVerifier v{cb};
    v.start(clock, rng);
    Chain chain = honest_chain_with(m, v.nonce, cb, params.n_c, rng, clock, 1.0);
    chain[3].prev = crypto::Digest{};
    PopProof proof{chain, 1};
    CHECK(v.verify(m, proof, params, clock) == PopVerdict::invalid_chain);
  }

  SUBCASE("too few confirmations") {
    PopVerifier v{cb};
    v.start(clock, rng);
    Chain chain = honest_chain_with(m, v.nonce, cb, 2, rng, clock, 1.0);
    PopProof proof{chain, 1};
    CHECK(v.verify(m, proof, params, clock) == PopVerdict::insufficient_confirmations);
  }

  SUBCASE("difficulty below the checkpoint's") {
    PopVerifier v{cb};
    v.start(clock, rng);
    Chain chain = {cb};
    chain.push_back(mine_block(cb.hash(), {publication_payload(m, v.nonce)}, 2, rng, clock.now));
    Miner weak{1.0, 1.0, 2};
    for (uint32_t i = 0; i < params.n_c; i++) weak.mine_step(chain, rng, clock);
    PopProof proof{chain, 1};
    CHECK(v.verify(m, proof, params, clock) == PopVerdict::low_difficulty);
  }

  SUBCASE("window exceeded") {
    PopVerifier v{cb};
    v.start(clock, rng);
    Chain chain = honest_chain_with(m, v.nonce, cb, params.n_c, rng, clock, 1.0);
    clock.advance(params.n_c * params.tau * params.epsilon + 1.0);
    PopProof proof{chain, 1};
    CHECK(v.verify(m, proof, params, clock) == PopVerdict::too_slow);
  }
}

TEST_CASE("timer-delay soundness: delays never enlarge the accept set") {
  PopParams params{5, 1.0, 1.5, 6};
  for (uint64_t trial = 0; trial < 40; trial++) {
    for (double d1 : {0.0, 1.0, 4.0}) {
      for (double d2 : {0.0, 2.0}) {
        // zero-delay baseline with the same randomness
        auto run = [&](double delay1, double delay2) {
          Rng rng(1000 + trial);
          SimClock clock;
          PowBlock cb = mine_block(crypto::Digest{}, {}, params.difficulty, rng, 0.0);
          PopVerifier v{cb};
          v.start(clock, rng, delay1);
          Bytes m = to_bytes("m");
          Chain chain = honest_chain_with(m, v.nonce, cb, params.n_c, rng, clock, params.tau);
          clock.advance(delay2);  // delayed proof delivery
          auto proof = prove_publication(m, v.nonce, chain, cb.hash(), params.n_c);
          REQUIRE(proof.has_value());
          return v.verify(m, *proof, params, clock) == PopVerdict::accept;
        };
        bool delayed = run(d1, d2);
        bool baseline = run(0.0, 0.0);
        if (delayed) CHECK(baseline);  // accept(delayed) subset of accept(zero)
      }
    }
  }
}

TEST_CASE("estimate_rates: epsilon -> large drives false rejects to zero") {
  Rng rng(7);
  PopParams params{5, 1.0, 1000.0, 4};
  auto est = estimate_rates(params, 0.0, 300, rng);
  CHECK(est.false_reject_rate == 0.0);
  CHECK(est.forgery_success_rate == 0.0);
}

TEST_CASE("estimate_rates: desk-scale sanity and monotonicity in epsilon") {
  PopParams base{10, 1.0, 2.0, 4};
  double prev_rate = 1.0;
  for (double eps : {1.2, 1.5, 2.0}) {
    PopParams p = base;
    p.epsilon = eps;
    Rng rng(42);  // common random numbers across the sweep
    auto est = estimate_rates(p, 0.1, 2000, rng);
    CHECK(est.false_reject_rate <= prev_rate);
    prev_rate = est.false_reject_rate;
  }
  CHECK(prev_rate < 0.01);  // eps = 2 lands well under 1%
}

TEST_CASE("estimate_rates: frozen regression baseline at the pinned seed") {
  PopParams params{10, 1.0, 2.0, 4};
  Rng rng(42);
  auto est = estimate_rates(params, 0.1, 2000, rng);
  CHECK(est.false_reject_rate == doctest::Approx(0.0085).epsilon(1e-9));
  CHECK(est.forgery_success_rate == 0.0);
}
