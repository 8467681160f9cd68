#pragma once

#include <string>
#include <variant>

#include "fairexec/crypto.hpp"
#include "fairexec/exec_model.hpp"
#include "fairexec/ledger.hpp"
#include "fairexec/tee.hpp"

namespace fairexec::protocol {

enum class Variant : std::uint8_t {
  Request = 1,
  Accept = 2,
  Reject = 3,
  RoundResult = 4,
  Update = 5,
  KeyReveal = 6,
  Continue = 7,
  Terminate = 8,
};
std::string_view to_string(Variant v);

struct Request {
  std::string function_id;  // catalog name of the workload
  MState state;
  std::uint64_t total_cycles = 0;
  ledger::Coins rate = 0;
  tee::ResultMode mode = tee::ResultMode::FullState;
};

struct Accept {
  crypto::Address executor;
  tee::AttestationRecord attestation;
};

struct Reject {
  std::string reason;
};

struct RoundResult {
  std::uint64_t round_id = 0;
  std::uint64_t cycles_requested = 0;
  tee::WrappedResult result;
};

struct Update {
  ledger::ChannelUpdate update;
};

struct KeyReveal {
  std::uint64_t round_id = 0;
  crypto::SymmetricKey key;
};

struct Continue {
  std::uint64_t cycles = 0;
};

struct Terminate {};

using Body = std::variant<Request, Accept, Reject, RoundResult, Update, KeyReveal, Continue, Terminate>;

// Wire layout: variant byte, sender address, u64 sequence number, 32-byte
// contract id (zero before a channel exists), then the body fields.
struct Message {
  crypto::Address sender;
  std::uint64_t seq = 0;
  ledger::ContractId contract;
  Body body;

  Variant variant() const;
};

Bytes encode(const Message& m);
// Throws DecodeError on malformed input, including trailing bytes.
Message decode(ByteView data);

}  // namespace fairexec::protocol
