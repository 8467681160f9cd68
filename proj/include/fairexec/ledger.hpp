#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fairexec/crypto.hpp"

namespace fairexec::ledger {

using Coins = std::uint64_t;
using Tick = std::uint64_t;
using ContractId = crypto::Digest;

enum class Method : std::uint8_t { CreateContract = 0, InitChannel = 1, CloseChannel = 2, ChannelTimeout = 3 };
std::string_view to_string(Method m);

// Gas figures of the channel contract. One coin is one wei; the default gas
// price is 2 Gwei and USD figures assume 640 USD per ether.
struct FeeSchedule {
  std::uint64_t creation_gas = 358'600;
  std::uint64_t init_gas = 81'053;
  std::uint64_t close_gas = 114'757;
  std::uint64_t timeout_gas = 21'732;
  Coins gas_price = 2'000'000'000;
  double usd_per_coin = 640e-18;

  std::uint64_t gas(Method m) const;
  Coins fee(Method m) const { return gas(m) * gas_price; }
  double usd(Method m) const { return static_cast<double>(fee(m)) * usd_per_coin; }
};

enum class ChannelStatus : std::uint8_t { Open = 0, Closed = 1, Destroyed = 2 };
std::string_view to_string(ChannelStatus s);

struct PaymentChannel {
  ContractId id;
  crypto::Address addr_r;
  crypto::Address addr_e;
  Tick timeout = 0;
  Coins deposit = 0;
  ChannelStatus status = ChannelStatus::Open;
  // Set by a successful close; readable by anyone afterwards.
  std::optional<crypto::SymmetricKey> published_key;
  Coins paid_to_executor = 0;
  Coins refunded_to_requester = 0;
};

// H(id || v || key_hash) with id and key_hash as 32 raw bytes and v as u64 LE.
crypto::Digest state_hash(const ContractId& id, Coins v, const crypto::Digest& key_hash);

struct ChannelUpdate {
  ContractId id;
  Coins v = 0;
  crypto::Digest key_hash;
  crypto::Signature sig;

  bool operator==(const ChannelUpdate&) const = default;
};

ChannelUpdate sign_update(const crypto::SigningIdentity& signer, const ContractId& id, Coins v,
                          const crypto::Digest& key_hash);
bool verify_update(const ChannelUpdate& u, const crypto::Address& signer);

struct Settlement {
  ContractId id;
  Coins to_executor = 0;
  Coins to_requester = 0;
  ChannelStatus status = ChannelStatus::Open;
  Tick tick = 0;
};

struct InitChannelTx {
  crypto::Address addr_r;
  crypto::Address addr_e;
  Tick timeout = 0;
  Coins deposit = 0;
};
struct CloseChannelTx {
  ContractId id;
  crypto::Signature sig_r;
  crypto::Signature sig_e;
  Coins v = 0;
  crypto::Digest key_hash;
  crypto::SymmetricKey k;
};
struct ChannelTimeoutTx {
  ContractId id;
};

struct Transaction {
  crypto::Address submitter;
  std::variant<InitChannelTx, CloseChannelTx, ChannelTimeoutTx> call;

  Method method() const;
  std::optional<ContractId> target() const;
  crypto::Digest args_digest() const;
};

struct Receipt {
  std::uint64_t tx_id = 0;
  crypto::Address submitter;
  Method method = Method::InitChannel;
  ContractId contract;  // zero when the call failed before creating one
  crypto::Digest args_digest;
  Tick submitted = 0;
  Tick executed = 0;
  Coins fee = 0;
  std::optional<ErrorCode> error;
  std::optional<Settlement> settlement;

  bool ok() const { return !error.has_value(); }
};

// Single serialized state machine. Direct methods execute at now(); the
// submit/advance pair models a chain that includes every transaction within
// `liveness_bound` ticks. Failed calls revert and charge no fee.
class Ledger {
 public:
  explicit Ledger(FeeSchedule fees = {}, Tick liveness_bound = 10, Tick confirm_delay = 10);

  Tick now() const { return now_; }
  Tick liveness_bound() const { return liveness_bound_; }
  Tick confirm_delay() const { return confirm_delay_; }
  const FeeSchedule& fees() const { return fees_; }

  // Test setup only; the minted total is what conservation checks against.
  void mint(const crypto::Address& to, Coins amount);
  Coins balance(const crypto::Address& a) const;
  Coins fee_sink() const { return fee_sink_; }
  Coins minted() const { return minted_; }
  Coins locked_in_channels() const;
  // balances + open deposits + fee sink; equals minted() at every tick.
  Coins total_supply() const;

  const PaymentChannel& channel(const ContractId& id) const;  // UnknownChannel
  bool has_channel(const ContractId& id) const { return channels_.count(id) != 0; }
  const std::map<ContractId, PaymentChannel>& channels() const { return channels_; }
  std::optional<crypto::SymmetricKey> published_key(const ContractId& id) const;

  ContractId init_channel(const crypto::Address& submitter, const crypto::Address& addr_r,
                          const crypto::Address& addr_e, Tick timeout, Coins deposit);
  Settlement close_channel(const crypto::Address& submitter, const ContractId& id,
                           const crypto::Signature& sig_r, const crypto::Signature& sig_e, Coins v,
                           const crypto::Digest& key_hash, const crypto::SymmetricKey& k);
  Settlement channel_timeout(const crypto::Address& caller, const ContractId& id);

  std::uint64_t submit_tx(Transaction tx);
  std::optional<Tick> next_due() const;
  std::vector<Receipt> advance_time(Tick ticks);
  std::vector<Receipt> advance_to(Tick t);
  const std::vector<Receipt>& receipts() const { return receipts_; }

  // One line per executed transaction:
  // tick, method, contract id, args digest, fee, result (tab separated).
  std::string trace_log() const;

 private:
  struct Pending {
    std::uint64_t tx_id;
    Tick submitted;
    Tick due;
    Transaction tx;
  };

  PaymentChannel& open_channel(const ContractId& id);
  void charge(const crypto::Address& who, Method m);
  Receipt execute(const Pending& p);

  FeeSchedule fees_;
  Tick liveness_bound_;
  Tick confirm_delay_;
  Tick now_ = 0;
  Coins minted_ = 0;
  Coins fee_sink_ = 0;
  std::uint64_t next_tx_ = 1;
  std::uint64_t channel_nonce_ = 0;
  std::map<crypto::Address, Coins> balances_;
  std::map<ContractId, PaymentChannel> channels_;
  std::vector<Pending> pending_;
  std::vector<Receipt> receipts_;
};

struct CostLine {
  Method method;
  std::uint64_t calls = 0;
  std::uint64_t gas_per_call = 0;
  Coins coins = 0;
  double usd = 0.0;
};

struct CostReport {
  std::vector<CostLine> lines;
  Coins total_coins = 0;
  double total_usd = 0.0;
};

// Per-method gas and USD for the successful transactions in a receipt list.
CostReport report_costs(const std::vector<Receipt>& receipts, const FeeSchedule& fees);
// The four per-method rows plus the init+close per-session total.
std::string format_fee_table(const FeeSchedule& fees);
std::string format_usd(double usd);

}  // namespace fairexec::ledger
