#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ekiden {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
  return std::string(b.begin(), b.end());
}

std::string hex_encode(ByteView data);
Bytes hex_decode(std::string_view hex);  // throws Error on malformed input

// Error taxonomy shared by every module. Protocol-normal outcomes (ledger
// reject, not-ready, cache miss) are modeled as return values, not errors.
class Error : public std::runtime_error {
 public:
  enum class Code {
    bad_argument,
    config,
    decode,
    crypto_auth,     // authentication / verification failure on decrypt
    enclave_terminated,
    node_crashed,
    dropped,         // message lost on an adversarial channel (timeout)
    budget_exhausted,
    stale_epoch,
    contract_abort,
    not_found,
    corrupt_log,
    retries_exhausted,
    io,
  };

  Error(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

[[noreturn]] inline void fail(Error::Code code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ekiden
