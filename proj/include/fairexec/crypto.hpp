#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <random>
#include <string>

#include "fairexec/bytes.hpp"

namespace fairexec::crypto {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kAddressSize = 20;
inline constexpr std::size_t kNonceSize = 24;
inline constexpr std::size_t kTagSize = 16;

struct Digest {
  std::array<std::uint8_t, kDigestSize> bytes{};

  std::string hex() const { return to_hex(bytes); }
  auto operator<=>(const Digest&) const = default;
};

struct SymmetricKey {
  std::array<std::uint8_t, kKeySize> bytes{};

  auto operator<=>(const SymmetricKey&) const = default;
};

struct Address {
  std::array<std::uint8_t, kAddressSize> bytes{};

  std::string hex() const { return to_hex(bytes); }
  auto operator<=>(const Address&) const = default;
};

// nonce || ciphertext || tag. length_hint is the plaintext size.
struct Ciphertext {
  Bytes payload;
  std::uint64_t length_hint = 0;

  bool operator==(const Ciphertext&) const = default;
};

// Public key followed by the detached signature. The verifier checks the
// embedded key against the expected address, since an address cannot be
// inverted back to a key.
struct Signature {
  Bytes bytes;

  bool operator==(const Signature&) const = default;
};

// The single randomness source threaded through a simulation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, bound).
  std::uint64_t uniform(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  void fill(std::span<std::uint8_t> out);

 private:
  std::mt19937_64 engine_;
};

class SigningIdentity {
 public:
  static SigningIdentity generate(Rng& rng);

  const Address& address() const { return address_; }
  const std::array<std::uint8_t, 32>& public_key() const { return public_key_; }
  Signature sign(const Digest& d) const;

 private:
  SigningIdentity() = default;

  std::array<std::uint8_t, 64> secret_{};
  std::array<std::uint8_t, 32> public_key_{};
  Address address_{};
};

Digest hash(ByteView data);
SymmetricKey generate_key(Rng& rng);
Digest hash_key(const SymmetricKey& k);
Address address_of(ByteView public_key);

Ciphertext encrypt(const SymmetricKey& k, ByteView m);
// Throws Error(AuthFailure) on a wrong key or any modification.
Bytes decrypt(const SymmetricKey& k, const Ciphertext& c);

bool check_sig(const Digest& d, const Signature& sig, const Address& addr);

void encode(ByteWriter& w, const Ciphertext& c);
Ciphertext decode_ciphertext(ByteReader& r);

}  // namespace fairexec::crypto
