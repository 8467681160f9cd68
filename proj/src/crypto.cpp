#include "fairexec/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

namespace fairexec::crypto {
namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialisation failed");
}

constexpr std::size_t kPublicKeySize = crypto_sign_PUBLICKEYBYTES;
constexpr std::size_t kSigSize = crypto_sign_BYTES;

}  // namespace

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    auto word = engine_();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
}

Digest hash(ByteView data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

SymmetricKey generate_key(Rng& rng) {
  SymmetricKey k;
  rng.fill(k.bytes);
  return k;
}

Digest hash_key(const SymmetricKey& k) { return hash(k.bytes); }

Address address_of(ByteView public_key) {
  auto d = hash(public_key);
  Address a;
  std::copy(d.bytes.end() - kAddressSize, d.bytes.end(), a.bytes.begin());
  return a;
}

SigningIdentity SigningIdentity::generate(Rng& rng) {
  ensure_sodium();
  std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed{};
  rng.fill(seed);
  SigningIdentity id;
  crypto_sign_seed_keypair(id.public_key_.data(), id.secret_.data(), seed.data());
  id.address_ = address_of(id.public_key_);
  sodium_memzero(seed.data(), seed.size());
  return id;
}

Signature SigningIdentity::sign(const Digest& d) const {
  Signature sig;
  sig.bytes.resize(kPublicKeySize + kSigSize);
  std::copy(public_key_.begin(), public_key_.end(), sig.bytes.begin());
  crypto_sign_detached(sig.bytes.data() + kPublicKeySize, nullptr, d.bytes.data(), d.bytes.size(),
                       secret_.data());
  return sig;
}

bool check_sig(const Digest& d, const Signature& sig, const Address& addr) {
  ensure_sodium();
  if (sig.bytes.size() != kPublicKeySize + kSigSize) return false;
  ByteView pk(sig.bytes.data(), kPublicKeySize);
  if (address_of(pk) != addr) return false;
  return crypto_sign_verify_detached(sig.bytes.data() + kPublicKeySize, d.bytes.data(),
                                     d.bytes.size(), pk.data()) == 0;
}

// The nonce is derived from (key, message) so encryption stays a pure
// function under a fixed seed. Keys are single-use per round.
Ciphertext encrypt(const SymmetricKey& k, ByteView m) {
  ensure_sodium();
  ByteWriter w;
  w.str("fairexec/nonce");
  w.raw(k.bytes);
  w.raw(m);
  auto n = hash(w.bytes());

  Ciphertext c;
  c.length_hint = m.size();
  c.payload.resize(kNonceSize + m.size() + kTagSize);
  std::copy_n(n.bytes.begin(), kNonceSize, c.payload.begin());
  unsigned long long clen = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(c.payload.data() + kNonceSize, &clen, m.data(),
                                             m.size(), nullptr, 0, nullptr, c.payload.data(),
                                             k.bytes.data());
  return c;
}

Bytes decrypt(const SymmetricKey& k, const Ciphertext& c) {
  ensure_sodium();
  if (c.payload.size() < kNonceSize + kTagSize) {
    throw Error(ErrorCode::AuthFailure, "ciphertext too short");
  }
  Bytes m(c.payload.size() - kNonceSize - kTagSize);
  unsigned long long mlen = 0;
  int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
      m.data(), &mlen, nullptr, c.payload.data() + kNonceSize, c.payload.size() - kNonceSize,
      nullptr, 0, c.payload.data(), k.bytes.data());
  if (rc != 0) throw Error(ErrorCode::AuthFailure, "authentication tag mismatch");
  if (mlen != c.length_hint) throw Error(ErrorCode::AuthFailure, "length hint mismatch");
  return m;
}

void encode(ByteWriter& w, const Ciphertext& c) {
  w.u64(c.length_hint);
  w.blob(c.payload);
}

Ciphertext decode_ciphertext(ByteReader& r) {
  Ciphertext c;
  c.length_hint = r.u64();
  c.payload = r.blob();
  return c;
}

}  // namespace fairexec::crypto
