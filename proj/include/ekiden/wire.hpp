#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ekiden/bytes.hpp"

namespace ekiden::wire {

// Canonical encoding used for everything that gets hashed or signed:
// tag-length-value with a fixed field order and big-endian 32-bit lengths.
// Records open with their type tag so distinct record types can never
// collide byte-wise.

class Encoder {
 public:
  void tag(std::string_view record_tag);
  void bytes(ByteView v);
  void str(std::string_view s) { bytes(ByteView(reinterpret_cast<const uint8_t*>(s.data()), s.size())); }
  void u64(uint64_t v);
  void u32(uint32_t v);
  void boolean(bool v);
  // Nested record or list payload, length-prefixed like any other field.
  void nested(const Bytes& encoded) { bytes(encoded); }

  template <typename T>
  void list(const std::vector<T>& items, void (*enc)(Encoder&, const T&)) {
    u32(static_cast<uint32_t>(items.size()));
    for (const auto& it : items) {
      Encoder inner;
      enc(inner, it);
      nested(inner.out);
    }
  }

  Bytes out;

 private:
  void len_prefix(size_t n);
};

class Decoder {
 public:
  explicit Decoder(ByteView data) : data_(data) {}

  // Consumes and checks the record tag; throws Error::decode on mismatch.
  void tag(std::string_view expected);
  Bytes bytes();
  std::string str();
  uint64_t u64();
  uint32_t u32();
  bool boolean();

  template <typename T>
  std::vector<T> list(T (*dec)(Decoder&)) {
    uint32_t n = u32();
    std::vector<T> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; i++) {
      Bytes item = bytes();
      Decoder d(item);
      out.push_back(dec(d));
    }
    return out;
  }

  bool done() const { return off_ == data_.size(); }
  void expect_done();

 private:
  ByteView data_;
  size_t off_ = 0;

  ByteView take(size_t n);
};

}  // namespace ekiden::wire
