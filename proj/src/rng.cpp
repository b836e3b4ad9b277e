#include "ekiden/rng.hpp"

#include <sodium.h>

#include <cmath>
#include <cstring>

#include "ekiden/bytes.hpp"

namespace ekiden {

namespace {
std::array<uint8_t, 32> seed_key(ByteView material) {
  std::array<uint8_t, 32> key;
  crypto_hash_sha256(key.data(), material.data(), material.size());
  return key;
}
}  // namespace

Rng::Rng(uint64_t seed) {
  uint8_t buf[16] = {'e', 'k', 'd', '.', 'r', 'n', 'g', '.'};
  for (int i = 0; i < 8; i++) buf[8 + i] = static_cast<uint8_t>(seed >> (8 * i));
  key_ = seed_key(ByteView(buf, sizeof buf));
}

Rng::Rng(const std::array<uint8_t, 32>& key) : key_(key) {}

void Rng::refill() {
  uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
  std::memcpy(nonce, &counter_, sizeof counter_);
  counter_++;
  std::memset(buf_.data(), 0, buf_.size());
  crypto_stream_chacha20_xor(buf_.data(), buf_.data(), buf_.size(), nonce, key_.data());
  pos_ = 0;
}

void Rng::fill(uint8_t* out, size_t n) {
  while (n > 0) {
    if (pos_ == buf_.size()) refill();
    size_t take = std::min(n, buf_.size() - pos_);
    std::memcpy(out, buf_.data() + pos_, take);
    pos_ += take;
    out += take;
    n -= take;
  }
}

Bytes Rng::bytes(size_t n) {
  Bytes out(n);
  fill(out.data(), n);
  return out;
}

uint64_t Rng::next_u64() {
  uint64_t v;
  fill(reinterpret_cast<uint8_t*>(&v), sizeof v);
  return v;
}

uint64_t Rng::uniform(uint64_t bound) {
  if (bound == 0) fail(Error::Code::bad_argument, "uniform bound must be positive");
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double mean) {
  double u;
  do {
    u = next_double();
  } while (u <= 0.0);
  return -mean * std::log(u);
}

Rng Rng::fork(std::string_view label) {
  Bytes material;
  material.insert(material.end(), key_.begin(), key_.end());
  uint64_t ctr = counter_;
  for (int i = 0; i < 8; i++) material.push_back(static_cast<uint8_t>(ctr >> (8 * i)));
  material.push_back('/');
  material.insert(material.end(), label.begin(), label.end());
  counter_ += 1;  // decouple the child from this stream's future output
  pos_ = buf_.size();
  return Rng(seed_key(material));
}

}  // namespace ekiden
