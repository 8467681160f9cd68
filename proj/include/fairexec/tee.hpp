#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>

#include "fairexec/crypto.hpp"
#include "fairexec/exec_model.hpp"

namespace fairexec::tee {

inline constexpr std::uint64_t kDefaultMemoryLimit = 128ull * 1024 * 1024;

enum class ResultMode : std::uint8_t { FullState = 0, Diff = 1 };

// Simulated enclave time in ticks: a fixed enter/exit charge per call plus a
// per-cycle compute charge. With the defaults, 1000 cycles in 100 calls cost
// five times as much as 1000 cycles in 2 calls.
struct OverheadModel {
  std::uint64_t enter_exit_ticks = 4000;
  std::uint64_t per_cycle_ticks = 90;

  std::uint64_t call_cost(std::uint64_t cycles) const {
    return enter_exit_ticks + cycles * per_cycle_ticks;
  }
  std::uint64_t total(std::uint64_t calls, std::uint64_t cycles) const {
    return calls * enter_exit_ticks + cycles * per_cycle_ticks;
  }
};

// Output of the wrapper for one round. `enc_state` holds either the full new
// state or the diff against the input, depending on `mode`.
struct WrappedResult {
  crypto::Digest input_digest;
  ResultMode mode = ResultMode::Diff;
  crypto::Ciphertext enc_state;
  crypto::Ciphertext enc_out;
  std::uint64_t cycles_done = 0;
  crypto::Digest key_hash;
  bool terminal = false;
  crypto::Signature attestation;

  bool operator==(const WrappedResult&) const = default;
};

// Canonical byte string the attestation signs: fixed field order,
// length-prefixed variable fields, little-endian integers.
Bytes attested_encoding(const crypto::Digest& measurement, const WrappedResult& r);

void encode(ByteWriter& w, const WrappedResult& r);
WrappedResult decode_wrapped(ByteReader& r);

// What a requester learns out of band before trusting an enclave.
struct AttestationRecord {
  crypto::Digest expected_measurement;
  crypto::Address attestation_address;
};

bool verify_attested(const WrappedResult& r, const crypto::Digest& expected_measurement,
                     const crypto::Address& attestation_address);

crypto::Digest measure(const Program& p);

class Enclave {
 public:
  struct Execution {
    std::uint64_t round_id = 0;
    WrappedResult result;
    std::uint64_t enclave_ticks = 0;
  };

  // The enclave draws its attestation identity and its own key stream from
  // `rng`, so a seeded simulation stays reproducible.
  static Enclave load(std::shared_ptr<const Program> program, crypto::Rng& rng,
                      std::uint64_t memory_limit = kDefaultMemoryLimit, OverheadModel overhead = {});

  const crypto::Digest& measurement() const { return measurement_; }
  const crypto::Address& attestation_address() const { return identity_.address(); }
  AttestationRecord attestation_record() const { return {measurement_, attestation_address()}; }
  std::uint64_t memory_limit() const { return memory_limit_; }
  std::uint64_t call_counter() const { return calls_; }
  std::uint64_t cycles_executed() const { return cycles_; }
  const OverheadModel& overhead() const { return overhead_; }
  std::uint64_t total_time_ticks() const { return overhead_.total(calls_, cycles_); }
  const Program& program() const { return *program_; }

  // Runs the wrapper on `s`. Throws MemoryLimitExceeded before doing any work
  // when the input does not fit.
  Execution execute(const MState& s, std::uint64_t cycles, ResultMode mode);
  // Runs the wrapper on the state produced by the previous round.
  Execution resume(std::uint64_t cycles, ResultMode mode);
  bool has_state() const { return latest_.has_value(); }

  // Throws UnknownRound.
  crypto::SymmetricKey reveal_key(std::uint64_t round_id) const;

 private:
  Enclave(std::shared_ptr<const Program> program, crypto::SigningIdentity identity,
          std::uint64_t key_seed, std::uint64_t memory_limit, OverheadModel overhead);

  std::shared_ptr<const Program> program_;
  crypto::Digest measurement_;
  crypto::SigningIdentity identity_;
  crypto::Rng rng_;
  std::uint64_t memory_limit_;
  OverheadModel overhead_;
  std::uint64_t calls_ = 0;
  std::uint64_t cycles_ = 0;
  std::map<std::uint64_t, crypto::SymmetricKey> keys_;
  std::optional<MState> latest_;
};

}  // namespace fairexec::tee
