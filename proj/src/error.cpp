#include "fairexec/error.hpp"

#include "fairexec/bytes.hpp"

namespace fairexec {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::BaseMismatch: return "BaseMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MemoryLimitExceeded: return "MemoryLimitExceeded";
    case ErrorCode::UnknownRound: return "UnknownRound";
    case ErrorCode::InsufficientFunds: return "InsufficientFunds";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::InvalidTimeout: return "InvalidTimeout";
    case ErrorCode::BadSignatureR: return "BadSignatureR";
    case ErrorCode::BadSignatureE: return "BadSignatureE";
    case ErrorCode::PreimageMismatch: return "PreimageMismatch";
    case ErrorCode::Overdraw: return "Overdraw";
    case ErrorCode::ChannelNotOpen: return "ChannelNotOpen";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::TooEarly: return "TooEarly";
    case ErrorCode::AttestationInvalid: return "AttestationInvalid";
    case ErrorCode::BadUpdateSignature: return "BadUpdateSignature";
    case ErrorCode::WrongAmount: return "WrongAmount";
    case ErrorCode::TickLimitExceeded: return "TickLimitExceeded";
    case ErrorCode::UnknownWorkload: return "UnknownWorkload";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DecodeError: return "DecodeError";
  }
  return "Unknown";
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(ErrorCode::DecodeError, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::DecodeError, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

}  // namespace fairexec
