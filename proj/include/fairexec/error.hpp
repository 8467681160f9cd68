#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairexec {

enum class ErrorCode {
  // crypto
  AuthFailure,
  // exec_model
  SchemaMismatch,
  BaseMismatch,
  DimensionMismatch,
  // tee
  MemoryLimitExceeded,
  UnknownRound,
  // ledger
  InsufficientFunds,
  Unauthorized,
  InvalidTimeout,
  BadSignatureR,
  BadSignatureE,
  PreimageMismatch,
  Overdraw,
  ChannelNotOpen,
  UnknownChannel,
  TooEarly,
  // protocol
  AttestationInvalid,
  BadUpdateSignature,
  WrongAmount,
  // net_sim
  TickLimitExceeded,
  // workloads / harness
  UnknownWorkload,
  ConfigError,
  DecodeError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fairexec
