#include "ekiden/wire.hpp"

namespace ekiden::wire {

void Encoder::len_prefix(size_t n) {
  if (n > 0xffffffffull) fail(Error::Code::bad_argument, "field too large to encode");
  uint32_t v = static_cast<uint32_t>(n);
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void Encoder::tag(std::string_view record_tag) {
  str(record_tag);
}

void Encoder::bytes(ByteView v) {
  len_prefix(v.size());
  out.insert(out.end(), v.begin(), v.end());
}

void Encoder::u64(uint64_t v) {
  len_prefix(8);
  for (int i = 7; i >= 0; i--) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void Encoder::u32(uint32_t v) {
  len_prefix(4);
  for (int i = 3; i >= 0; i--) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void Encoder::boolean(bool v) {
  len_prefix(1);
  out.push_back(v ? 1 : 0);
}

ByteView Decoder::take(size_t n) {
  if (data_.size() - off_ < n) fail(Error::Code::decode, "record truncated");
  ByteView v = data_.subspan(off_, n);
  off_ += n;
  return v;
}

Bytes Decoder::bytes() {
  ByteView lp = take(4);
  uint32_t n = (uint32_t(lp[0]) << 24) | (uint32_t(lp[1]) << 16) | (uint32_t(lp[2]) << 8) | uint32_t(lp[3]);
  ByteView v = take(n);
  return Bytes(v.begin(), v.end());
}

std::string Decoder::str() {
  Bytes b = bytes();
  return std::string(b.begin(), b.end());
}

void Decoder::tag(std::string_view expected) {
  std::string got = str();
  if (got != expected)
    fail(Error::Code::decode, "record tag mismatch: expected " + std::string(expected) + ", got " + got);
}

uint64_t Decoder::u64() {
  Bytes b = bytes();
  if (b.size() != 8) fail(Error::Code::decode, "bad u64 field width");
  uint64_t v = 0;
  for (uint8_t byte : b) v = (v << 8) | byte;
  return v;
}

uint32_t Decoder::u32() {
  Bytes b = bytes();
  if (b.size() != 4) fail(Error::Code::decode, "bad u32 field width");
  uint32_t v = 0;
  for (uint8_t byte : b) v = (v << 8) | byte;
  return v;
}

bool Decoder::boolean() {
  Bytes b = bytes();
  if (b.size() != 1 || b[0] > 1) fail(Error::Code::decode, "bad bool field");
  return b[0] == 1;
}

void Decoder::expect_done() {
  if (!done()) fail(Error::Code::decode, "trailing bytes after record");
}

}  // namespace ekiden::wire
