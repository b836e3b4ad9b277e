#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "ekiden/bytes.hpp"

namespace ekiden {

// Deterministic byte stream (ChaCha20 keystream over a hashed seed). Every
// source of randomness in the simulation flows through an Rng instance so a
// (seed, scenario) pair fixes all protocol message bytes. Instances are not
// shared between threads; fork() derives an independent child stream.
class Rng {
 public:
  explicit Rng(uint64_t seed);
  explicit Rng(const std::array<uint8_t, 32>& key);

  void fill(uint8_t* out, size_t n);
  Bytes bytes(size_t n);
  uint64_t next_u64();
  // Uniform in [0, bound) via rejection sampling; bound > 0.
  uint64_t uniform(uint64_t bound);
  double next_double();  // [0, 1)
  // Exponential with the given mean, for Poisson arrival processes.
  double exponential(double mean);

  // Domain-separated child stream; independent of later draws from *this.
  Rng fork(std::string_view label);

 private:
  std::array<uint8_t, 32> key_;
  uint64_t counter_ = 0;
  std::array<uint8_t, 64> buf_;
  size_t pos_ = 64;

  void refill();
};

}  // namespace ekiden
