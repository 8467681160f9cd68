#include "fairexec/tee.hpp"

namespace fairexec::tee {

Bytes attested_encoding(const crypto::Digest& measurement, const WrappedResult& r) {
  ByteWriter w;
  w.str("fairexec/attest/v1");
  w.raw(measurement.bytes);
  w.raw(r.input_digest.bytes);
  w.u8(static_cast<std::uint8_t>(r.mode));
  crypto::encode(w, r.enc_state);
  crypto::encode(w, r.enc_out);
  w.u64(r.cycles_done);
  w.raw(r.key_hash.bytes);
  w.u8(r.terminal ? 1 : 0);
  return std::move(w).take();
}

void encode(ByteWriter& w, const WrappedResult& r) {
  w.raw(r.input_digest.bytes);
  w.u8(static_cast<std::uint8_t>(r.mode));
  crypto::encode(w, r.enc_state);
  crypto::encode(w, r.enc_out);
  w.u64(r.cycles_done);
  w.raw(r.key_hash.bytes);
  w.u8(r.terminal ? 1 : 0);
  w.blob(r.attestation.bytes);
}

WrappedResult decode_wrapped(ByteReader& r) {
  WrappedResult out;
  out.input_digest.bytes = r.fixed<crypto::kDigestSize>();
  auto mode = r.u8();
  if (mode > 1) throw Error(ErrorCode::DecodeError, "unknown result mode");
  out.mode = static_cast<ResultMode>(mode);
  out.enc_state = crypto::decode_ciphertext(r);
  out.enc_out = crypto::decode_ciphertext(r);
  out.cycles_done = r.u64();
  out.key_hash.bytes = r.fixed<crypto::kDigestSize>();
  out.terminal = r.u8() != 0;
  out.attestation.bytes = r.blob();
  return out;
}

bool verify_attested(const WrappedResult& r, const crypto::Digest& expected_measurement,
                     const crypto::Address& attestation_address) {
  auto d = crypto::hash(attested_encoding(expected_measurement, r));
  return crypto::check_sig(d, r.attestation, attestation_address);
}

crypto::Digest measure(const Program& p) { return crypto::hash(as_bytes(p.code_identity())); }

Enclave::Enclave(std::shared_ptr<const Program> program, crypto::SigningIdentity identity,
                 std::uint64_t key_seed, std::uint64_t memory_limit, OverheadModel overhead)
    : program_(std::move(program)),
      measurement_(measure(*program_)),
      identity_(std::move(identity)),
      rng_(key_seed),
      memory_limit_(memory_limit),
      overhead_(overhead) {}

Enclave Enclave::load(std::shared_ptr<const Program> program, crypto::Rng& rng,
                      std::uint64_t memory_limit, OverheadModel overhead) {
  auto identity = crypto::SigningIdentity::generate(rng);
  auto key_seed = rng.next_u64();
  return Enclave(std::move(program), std::move(identity), key_seed, memory_limit, overhead);
}

Enclave::Execution Enclave::execute(const MState& s, std::uint64_t cycles, ResultMode mode) {
  if (s.size_bytes() + program_->working_set_bytes(s) > memory_limit_) {
    throw Error(ErrorCode::MemoryLimitExceeded,
                std::to_string(s.size_bytes()) + " byte input does not fit in " +
                    std::to_string(memory_limit_) + " bytes");
  }
  auto res = step(*program_, s, cycles);
  auto k = crypto::generate_key(rng_);

  WrappedResult out;
  out.input_digest = crypto::hash(s.blob);
  out.mode = mode;
  out.enc_state = mode == ResultMode::Diff ? crypto::encrypt(k, serialize(gen_diff(s, res.new_state)))
                                           : crypto::encrypt(k, serialize(res.new_state));
  out.enc_out = crypto::encrypt(k, serialize(res.out));
  out.cycles_done = res.cycles_done;
  out.key_hash = crypto::hash_key(k);
  out.terminal = res.terminal;
  out.attestation = identity_.sign(crypto::hash(attested_encoding(measurement_, out)));

  ++calls_;
  cycles_ += res.cycles_done;
  std::uint64_t round_id = calls_;
  keys_.emplace(round_id, k);
  latest_ = std::move(res.new_state);
  auto ticks = overhead_.call_cost(out.cycles_done);
  return Execution{round_id, std::move(out), ticks};
}

Enclave::Execution Enclave::resume(std::uint64_t cycles, ResultMode mode) {
  if (!latest_) throw Error(ErrorCode::UnknownRound, "no previous round to resume from");
  MState s = *latest_;
  return execute(s, cycles, mode);
}

crypto::SymmetricKey Enclave::reveal_key(std::uint64_t round_id) const {
  auto it = keys_.find(round_id);
  if (it == keys_.end()) throw Error(ErrorCode::UnknownRound, std::to_string(round_id));
  return it->second;
}

}  // namespace fairexec::tee
