#include "ekiden/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <sstream>

namespace ekiden::crypto {

namespace {
struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) fail(Error::Code::io, "libsodium initialization failed");
  }
};
const SodiumInit sodium_init_once;
}  // namespace

Digest Digest::from_bytes(ByteView b) {
  if (b.size() != kDigestSize) fail(Error::Code::decode, "bad digest width");
  Digest d;
  std::memcpy(d.v.data(), b.data(), kDigestSize);
  return d;
}

Digest sha256(ByteView data) {
  Digest d;
  crypto_hash_sha256(d.v.data(), data.data(), data.size());
  return d;
}

VerifyKey VerifyKey::from_bytes(ByteView b) {
  if (b.size() != kVerifyKeySize) fail(Error::Code::decode, "bad verify key width");
  VerifyKey k;
  std::memcpy(k.v.data(), b.data(), kVerifyKeySize);
  return k;
}

Signature Signature::from_bytes(ByteView b) {
  if (b.size() != kSignatureSize) fail(Error::Code::decode, "bad signature width");
  Signature s;
  std::memcpy(s.v.data(), b.data(), kSignatureSize);
  return s;
}

SigKeypair SigKeypair::generate(Rng& rng) {
  Bytes seed = rng.bytes(crypto_sign_SEEDBYTES);
  SigKeypair kp;
  kp.sk.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(kp.vk.v.data(), kp.sk.data(), seed.data());
  return kp;
}

Signature sign(const SigKeypair& kp, ByteView msg) {
  Signature sig;
  crypto_sign_detached(sig.v.data(), nullptr, msg.data(), msg.size(), kp.sk.data());
  return sig;
}

bool verify(const VerifyKey& vk, const Signature& sig, ByteView msg) {
  return crypto_sign_verify_detached(sig.v.data(), msg.data(), msg.size(), vk.v.data()) == 0;
}

// --------------------------------------------------------------------------

namespace {

// Length padding: plaintext is framed as [u32 length | data | zeros] rounded
// up to the pad granularity, so ciphertext size is a function of the length
// class only.
Bytes pad_frame(ByteView plaintext) {
  size_t framed = 4 + plaintext.size();
  size_t padded = (framed + kPadGranularity - 1) / kPadGranularity * kPadGranularity;
  Bytes out(padded, 0);
  uint32_t n = static_cast<uint32_t>(plaintext.size());
  out[0] = static_cast<uint8_t>(n >> 24);
  out[1] = static_cast<uint8_t>(n >> 16);
  out[2] = static_cast<uint8_t>(n >> 8);
  out[3] = static_cast<uint8_t>(n);
  std::memcpy(out.data() + 4, plaintext.data(), plaintext.size());
  return out;
}

Bytes unpad_frame(ByteView framed) {
  if (framed.size() < 4) fail(Error::Code::decode, "padded frame too short");
  uint32_t n = (uint32_t(framed[0]) << 24) | (uint32_t(framed[1]) << 16) |
               (uint32_t(framed[2]) << 8) | uint32_t(framed[3]);
  if (framed.size() < 4 + size_t(n)) fail(Error::Code::decode, "padded frame length corrupt");
  return Bytes(framed.begin() + 4, framed.begin() + 4 + n);
}

}  // namespace

SymKey SymKey::generate(Rng& rng) {
  SymKey k;
  rng.fill(k.v.data(), k.v.size());
  return k;
}

SymKey SymKey::from_bytes(ByteView b) {
  if (b.size() != kSymKeySize) fail(Error::Code::decode, "bad symmetric key width");
  SymKey k;
  std::memcpy(k.v.data(), b.data(), kSymKeySize);
  return k;
}

Bytes sym_enc(const SymKey& k, ByteView plaintext, Rng& rng) {
  Bytes framed = pad_frame(plaintext);
  Bytes out(crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES + framed.size());
  rng.fill(out.data(), crypto_secretbox_NONCEBYTES);
  crypto_secretbox_easy(out.data() + crypto_secretbox_NONCEBYTES, framed.data(), framed.size(),
                        out.data(), k.v.data());
  return out;
}

Bytes sym_dec(const SymKey& k, ByteView ciphertext) {
  if (ciphertext.size() < crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES)
    fail(Error::Code::crypto_auth, "ciphertext too short");
  size_t boxed = ciphertext.size() - crypto_secretbox_NONCEBYTES;
  Bytes framed(boxed - crypto_secretbox_MACBYTES);
  if (crypto_secretbox_open_easy(framed.data(), ciphertext.data() + crypto_secretbox_NONCEBYTES,
                                 boxed, ciphertext.data(), k.v.data()) != 0)
    fail(Error::Code::crypto_auth, "symmetric decryption failed authentication");
  return unpad_frame(framed);
}

PkKeypair PkKeypair::generate(Rng& rng) {
  Bytes seed = rng.bytes(crypto_box_SEEDBYTES);
  PkKeypair kp;
  crypto_box_seed_keypair(kp.pk.data(), kp.sk.data(), seed.data());
  return kp;
}

PkKeypair PkKeypair::from_seed(const Digest& seed) {
  PkKeypair kp;
  crypto_box_seed_keypair(kp.pk.data(), kp.sk.data(), seed.v.data());
  return kp;
}

// Ciphertext layout: ephemeral pk | nonce | box(framed plaintext).
Bytes pk_enc(const std::array<uint8_t, kBoxKeySize>& pk, ByteView plaintext, Rng& rng) {
  Bytes eph_seed = rng.bytes(crypto_box_SEEDBYTES);
  uint8_t eph_pk[crypto_box_PUBLICKEYBYTES], eph_sk[crypto_box_SECRETKEYBYTES];
  crypto_box_seed_keypair(eph_pk, eph_sk, eph_seed.data());

  Bytes framed = pad_frame(plaintext);
  Bytes out(crypto_box_PUBLICKEYBYTES + crypto_box_NONCEBYTES + crypto_box_MACBYTES + framed.size());
  std::memcpy(out.data(), eph_pk, crypto_box_PUBLICKEYBYTES);
  uint8_t* nonce = out.data() + crypto_box_PUBLICKEYBYTES;
  rng.fill(nonce, crypto_box_NONCEBYTES);
  if (crypto_box_easy(out.data() + crypto_box_PUBLICKEYBYTES + crypto_box_NONCEBYTES, framed.data(),
                      framed.size(), nonce, pk.data(), eph_sk) != 0)
    fail(Error::Code::crypto_auth, "box encryption failed");
  return out;
}

Bytes pk_dec(const PkKeypair& kp, ByteView ciphertext) {
  size_t header = crypto_box_PUBLICKEYBYTES + crypto_box_NONCEBYTES;
  if (ciphertext.size() < header + crypto_box_MACBYTES)
    fail(Error::Code::crypto_auth, "ciphertext too short");
  const uint8_t* eph_pk = ciphertext.data();
  const uint8_t* nonce = ciphertext.data() + crypto_box_PUBLICKEYBYTES;
  size_t boxed = ciphertext.size() - header;
  Bytes framed(boxed - crypto_box_MACBYTES);
  if (crypto_box_open_easy(framed.data(), ciphertext.data() + header, boxed, nonce, eph_pk,
                           kp.sk.data()) != 0)
    fail(Error::Code::crypto_auth, "asymmetric decryption failed authentication");
  return unpad_frame(framed);
}

// --------------------------------------------------------------------------

std::string golden_vectors() {
  std::ostringstream out;
  out << "sha256_empty=" << sha256(ByteView{}).hex() << "\n";
  out << "sha256_abc=" << sha256(ByteView(reinterpret_cast<const uint8_t*>("abc"), 3)).hex() << "\n";

  wire::Encoder enc;
  enc.tag("ekiden.golden");
  enc.u64(7);
  enc.str("state");
  out << "wire_record=" << hex_encode(ByteView(enc.out.data(), enc.out.size())) << "\n";
  out << "wire_record_hash=" << hash_bytes(ByteView(enc.out.data(), enc.out.size())).hex() << "\n";

  Rng rng(1);
  SigKeypair kp = SigKeypair::generate(rng);
  out << "ed25519_vk_seed1=" << kp.vk.hex() << "\n";
  Bytes msg = to_bytes("ekiden golden message");
  out << "ed25519_sig_seed1=" << hex_encode(sign(kp, msg).bytes()) << "\n";

  Rng rng2(2);
  SymKey sk = SymKey::generate(rng2);
  Bytes ct = sym_enc(sk, msg, rng2);
  out << "secretbox_seed2=" << hex_encode(ct) << "\n";

  Rng rng3(3);
  PkKeypair pkp = PkKeypair::generate(rng3);
  out << "box_pk_seed3=" << hex_encode(ByteView(pkp.pk.data(), pkp.pk.size())) << "\n";
  out << "box_ct_seed3=" << hex_encode(pk_enc(pkp.pk, msg, rng3)) << "\n";
  return out.str();
}

}  // namespace ekiden::crypto
