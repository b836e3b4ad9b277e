#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "ekiden/bytes.hpp"
#include "ekiden/rng.hpp"
#include "ekiden/wire.hpp"

namespace ekiden::crypto {

inline constexpr size_t kDigestSize = 32;

// Fixed-length hash output. Equal canonical encodings give equal digests.
struct Digest {
  std::array<uint8_t, kDigestSize> v{};

  bool operator==(const Digest&) const = default;
  auto operator<=>(const Digest&) const = default;
  std::string hex() const { return hex_encode(ByteView(v.data(), v.size())); }
  Bytes bytes() const { return Bytes(v.begin(), v.end()); }
  static Digest from_bytes(ByteView b);
};

Digest sha256(ByteView data);

// Digest of a canonical record encoding. All protocol hashes go through here.
inline Digest hash_bytes(ByteView encoded) { return sha256(encoded); }

template <typename Record>
Digest hash_canonical(const Record& r) {
  wire::Encoder e;
  r.encode(e);
  return sha256(ByteView(e.out.data(), e.out.size()));
}

// ---------------------------------------------------------------------------
// Signatures (Ed25519). Verification returns false on any malformed or
// altered input, never throws.

inline constexpr size_t kVerifyKeySize = 32;
inline constexpr size_t kSignatureSize = 64;

struct VerifyKey {
  std::array<uint8_t, kVerifyKeySize> v{};
  bool operator==(const VerifyKey&) const = default;
  auto operator<=>(const VerifyKey&) const = default;
  Bytes bytes() const { return Bytes(v.begin(), v.end()); }
  static VerifyKey from_bytes(ByteView b);
  std::string hex() const { return hex_encode(ByteView(v.data(), v.size())); }
};

struct Signature {
  std::array<uint8_t, kSignatureSize> v{};
  bool operator==(const Signature&) const = default;
  Bytes bytes() const { return Bytes(v.begin(), v.end()); }
  static Signature from_bytes(ByteView b);
};

struct SigKeypair {
  Bytes sk;  // 64-byte Ed25519 secret key
  VerifyKey vk;

  static SigKeypair generate(Rng& rng);
};

Signature sign(const SigKeypair& kp, ByteView msg);
bool verify(const VerifyKey& vk, const Signature& sig, ByteView msg);

// ---------------------------------------------------------------------------
// Authenticated symmetric encryption (XSalsa20-Poly1305). Plaintexts are
// padded to a fixed block granularity before encryption so ciphertext length
// reveals only the plaintext's length class.

inline constexpr size_t kPadGranularity = 32;
inline constexpr size_t kSymKeySize = 32;

struct SymKey {
  std::array<uint8_t, kSymKeySize> v{};
  bool operator==(const SymKey&) const = default;
  static SymKey generate(Rng& rng);
  static SymKey from_bytes(ByteView b);
};

// Self-contained ciphertext: nonce followed by the sealed padded payload.
Bytes sym_enc(const SymKey& k, ByteView plaintext, Rng& rng);
// Throws Error::crypto_auth on any tampering.
Bytes sym_dec(const SymKey& k, ByteView ciphertext);

// ---------------------------------------------------------------------------
// Asymmetric encryption (X25519 + XSalsa20-Poly1305 with an explicit
// ephemeral key). Same padding contract as sym_enc.

inline constexpr size_t kBoxKeySize = 32;

struct PkKeypair {
  std::array<uint8_t, kBoxKeySize> pk{};
  std::array<uint8_t, kBoxKeySize> sk{};

  static PkKeypair generate(Rng& rng);
  // Deterministic derivation, used by the key manager's per-epoch bundles.
  static PkKeypair from_seed(const Digest& seed);
  bool operator==(const PkKeypair&) const = default;
};

Bytes pk_enc(const std::array<uint8_t, kBoxKeySize>& pk, ByteView plaintext, Rng& rng);
Bytes pk_dec(const PkKeypair& kp, ByteView ciphertext);

// ---------------------------------------------------------------------------
// Golden test vectors: deterministic digests/signatures/ciphertexts for
// fixed seeds, one `name=hex` record per line. Stability across processes
// is what pins the canonical encoding.
std::string golden_vectors();

}  // namespace ekiden::crypto
