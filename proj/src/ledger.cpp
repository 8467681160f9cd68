#include "fairexec/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fairexec::ledger {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::CreateContract: return "createContract";
    case Method::InitChannel: return "initChannel";
    case Method::CloseChannel: return "closeChannel";
    case Method::ChannelTimeout: return "channelTimeout";
  }
  return "unknown";
}

std::string_view to_string(ChannelStatus s) {
  switch (s) {
    case ChannelStatus::Open: return "open";
    case ChannelStatus::Closed: return "closed";
    case ChannelStatus::Destroyed: return "destroyed";
  }
  return "unknown";
}

std::uint64_t FeeSchedule::gas(Method m) const {
  switch (m) {
    case Method::CreateContract: return creation_gas;
    case Method::InitChannel: return init_gas;
    case Method::CloseChannel: return close_gas;
    case Method::ChannelTimeout: return timeout_gas;
  }
  return 0;
}

crypto::Digest state_hash(const ContractId& id, Coins v, const crypto::Digest& key_hash) {
  ByteWriter w;
  w.raw(id.bytes);
  w.u64(v);
  w.raw(key_hash.bytes);
  return crypto::hash(w.bytes());
}

ChannelUpdate sign_update(const crypto::SigningIdentity& signer, const ContractId& id, Coins v,
                          const crypto::Digest& key_hash) {
  return ChannelUpdate{id, v, key_hash, signer.sign(state_hash(id, v, key_hash))};
}

bool verify_update(const ChannelUpdate& u, const crypto::Address& signer) {
  return crypto::check_sig(state_hash(u.id, u.v, u.key_hash), u.sig, signer);
}

Method Transaction::method() const {
  struct V {
    Method operator()(const InitChannelTx&) const { return Method::InitChannel; }
    Method operator()(const CloseChannelTx&) const { return Method::CloseChannel; }
    Method operator()(const ChannelTimeoutTx&) const { return Method::ChannelTimeout; }
  };
  return std::visit(V{}, call);
}

std::optional<ContractId> Transaction::target() const {
  if (auto* c = std::get_if<CloseChannelTx>(&call)) return c->id;
  if (auto* t = std::get_if<ChannelTimeoutTx>(&call)) return t->id;
  return std::nullopt;
}

crypto::Digest Transaction::args_digest() const {
  ByteWriter w;
  w.raw(submitter.bytes);
  w.u8(static_cast<std::uint8_t>(method()));
  if (auto* i = std::get_if<InitChannelTx>(&call)) {
    w.raw(i->addr_r.bytes);
    w.raw(i->addr_e.bytes);
    w.u64(i->timeout);
    w.u64(i->deposit);
  } else if (auto* c = std::get_if<CloseChannelTx>(&call)) {
    w.raw(c->id.bytes);
    w.blob(c->sig_r.bytes);
    w.blob(c->sig_e.bytes);
    w.u64(c->v);
    w.raw(c->key_hash.bytes);
    w.raw(c->k.bytes);
  } else if (auto* t = std::get_if<ChannelTimeoutTx>(&call)) {
    w.raw(t->id.bytes);
  }
  return crypto::hash(w.bytes());
}

Ledger::Ledger(FeeSchedule fees, Tick liveness_bound, Tick confirm_delay)
    : fees_(fees), liveness_bound_(liveness_bound), confirm_delay_(confirm_delay) {
  if (confirm_delay_ > liveness_bound_) {
    throw Error(ErrorCode::ConfigError, "confirmation delay exceeds the liveness bound");
  }
}

void Ledger::mint(const crypto::Address& to, Coins amount) {
  balances_[to] += amount;
  minted_ += amount;
}

Coins Ledger::balance(const crypto::Address& a) const {
  auto it = balances_.find(a);
  return it == balances_.end() ? 0 : it->second;
}

Coins Ledger::locked_in_channels() const {
  Coins total = 0;
  for (const auto& [_, ch] : channels_) {
    if (ch.status == ChannelStatus::Open) total += ch.deposit;
  }
  return total;
}

Coins Ledger::total_supply() const {
  Coins total = fee_sink_ + locked_in_channels();
  for (const auto& [_, b] : balances_) total += b;
  return total;
}

const PaymentChannel& Ledger::channel(const ContractId& id) const {
  auto it = channels_.find(id);
  if (it == channels_.end()) throw Error(ErrorCode::UnknownChannel, id.hex());
  return it->second;
}

std::optional<crypto::SymmetricKey> Ledger::published_key(const ContractId& id) const {
  auto it = channels_.find(id);
  if (it == channels_.end()) return std::nullopt;
  return it->second.published_key;
}

PaymentChannel& Ledger::open_channel(const ContractId& id) {
  auto it = channels_.find(id);
  if (it == channels_.end()) throw Error(ErrorCode::UnknownChannel, id.hex());
  if (it->second.status != ChannelStatus::Open) {
    throw Error(ErrorCode::ChannelNotOpen, "channel is " + std::string(to_string(it->second.status)));
  }
  return it->second;
}

void Ledger::charge(const crypto::Address& who, Method m) {
  auto fee = fees_.fee(m);
  balances_[who] -= fee;
  fee_sink_ += fee;
}

ContractId Ledger::init_channel(const crypto::Address& submitter, const crypto::Address& addr_r,
                                const crypto::Address& addr_e, Tick timeout, Coins deposit) {
  if (submitter != addr_r) throw Error(ErrorCode::Unauthorized, "only addr_r may fund a channel");
  if (timeout <= now_) throw Error(ErrorCode::InvalidTimeout, "timeout is not in the future");
  auto fee = fees_.fee(Method::InitChannel);
  if (balance(addr_r) < deposit || balance(addr_r) - deposit < fee) {
    throw Error(ErrorCode::InsufficientFunds, "deposit plus fee exceeds balance");
  }
  ByteWriter w;
  w.str("fairexec/channel");
  w.raw(addr_r.bytes);
  w.raw(addr_e.bytes);
  w.u64(channel_nonce_++);
  PaymentChannel ch;
  ch.id = crypto::hash(w.bytes());
  ch.addr_r = addr_r;
  ch.addr_e = addr_e;
  ch.timeout = timeout;
  ch.deposit = deposit;
  charge(submitter, Method::InitChannel);
  balances_[addr_r] -= deposit;
  auto id = ch.id;
  channels_.emplace(id, std::move(ch));
  return id;
}

Settlement Ledger::close_channel(const crypto::Address& submitter, const ContractId& id,
                                 const crypto::Signature& sig_r, const crypto::Signature& sig_e,
                                 Coins v, const crypto::Digest& key_hash,
                                 const crypto::SymmetricKey& k) {
  auto& ch = open_channel(id);
  if (balance(submitter) < fees_.fee(Method::CloseChannel)) {
    throw Error(ErrorCode::InsufficientFunds, "cannot pay the close fee");
  }
  auto sh = state_hash(id, v, crypto::hash_key(k));
  if (!crypto::check_sig(sh, sig_r, ch.addr_r)) throw Error(ErrorCode::BadSignatureR, id.hex());
  if (!crypto::check_sig(sh, sig_e, ch.addr_e)) throw Error(ErrorCode::BadSignatureE, id.hex());
  if (key_hash != crypto::hash_key(k)) throw Error(ErrorCode::PreimageMismatch, id.hex());
  if (v > ch.deposit) throw Error(ErrorCode::Overdraw, std::to_string(v));

  charge(submitter, Method::CloseChannel);
  balances_[ch.addr_e] += v;
  balances_[ch.addr_r] += ch.deposit - v;
  ch.paid_to_executor = v;
  ch.refunded_to_requester = ch.deposit - v;
  ch.published_key = k;
  ch.status = ChannelStatus::Closed;
  return Settlement{id, v, ch.deposit - v, ch.status, now_};
}

Settlement Ledger::channel_timeout(const crypto::Address& caller, const ContractId& id) {
  auto& ch = open_channel(id);
  if (now_ < ch.timeout) throw Error(ErrorCode::TooEarly, "timeout not reached");
  if (balance(caller) < fees_.fee(Method::ChannelTimeout)) {
    throw Error(ErrorCode::InsufficientFunds, "cannot pay the timeout fee");
  }
  charge(caller, Method::ChannelTimeout);
  balances_[ch.addr_r] += ch.deposit;
  ch.refunded_to_requester = ch.deposit;
  ch.status = ChannelStatus::Destroyed;
  return Settlement{id, 0, ch.deposit, ch.status, now_};
}

std::uint64_t Ledger::submit_tx(Transaction tx) {
  auto id = next_tx_++;
  pending_.push_back(Pending{id, now_, now_ + confirm_delay_, std::move(tx)});
  return id;
}

std::optional<Tick> Ledger::next_due() const {
  if (pending_.empty()) return std::nullopt;
  Tick due = pending_.front().due;
  for (const auto& p : pending_) due = std::min(due, p.due);
  return due;
}

Receipt Ledger::execute(const Pending& p) {
  Receipt r;
  r.tx_id = p.tx_id;
  r.submitter = p.tx.submitter;
  r.method = p.tx.method();
  r.args_digest = p.tx.args_digest();
  r.submitted = p.submitted;
  r.executed = now_;
  if (auto target = p.tx.target()) r.contract = *target;
  try {
    if (auto* i = std::get_if<InitChannelTx>(&p.tx.call)) {
      r.contract = init_channel(p.tx.submitter, i->addr_r, i->addr_e, i->timeout, i->deposit);
    } else if (auto* c = std::get_if<CloseChannelTx>(&p.tx.call)) {
      r.settlement = close_channel(p.tx.submitter, c->id, c->sig_r, c->sig_e, c->v, c->key_hash, c->k);
    } else if (auto* t = std::get_if<ChannelTimeoutTx>(&p.tx.call)) {
      r.settlement = channel_timeout(p.tx.submitter, t->id);
    }
    r.fee = fees_.fee(r.method);
  } catch (const Error& e) {
    r.error = e.code();
  }
  return r;
}

std::vector<Receipt> Ledger::advance_to(Tick t) {
  std::vector<Receipt> out;
  // Due ticks are submission + a constant delay, so submission order is due order.
  while (!pending_.empty() && pending_.front().due <= t) {
    Pending p = std::move(pending_.front());
    pending_.erase(pending_.begin());
    now_ = std::max(now_, p.due);
    auto r = execute(p);
    receipts_.push_back(r);
    out.push_back(std::move(r));
  }
  now_ = std::max(now_, t);
  return out;
}

std::vector<Receipt> Ledger::advance_time(Tick ticks) { return advance_to(now_ + ticks); }

std::string Ledger::trace_log() const {
  std::ostringstream os;
  for (const auto& r : receipts_) {
    os << r.executed << '\t' << to_string(r.method) << '\t' << r.contract.hex() << '\t'
       << r.args_digest.hex() << '\t' << r.fee << '\t'
       << (r.ok() ? std::string_view("ok") : to_string(*r.error)) << '\n';
  }
  return os.str();
}

CostReport report_costs(const std::vector<Receipt>& receipts, const FeeSchedule& fees) {
  CostReport rep;
  for (auto m : {Method::InitChannel, Method::CloseChannel, Method::ChannelTimeout}) {
    CostLine line{m, 0, fees.gas(m), 0, 0.0};
    for (const auto& r : receipts) {
      if (r.ok() && r.method == m) ++line.calls;
    }
    if (line.calls == 0) continue;
    line.coins = line.calls * fees.fee(m);
    line.usd = static_cast<double>(line.calls) * std::round(fees.usd(m) * 100.0) / 100.0;
    rep.total_coins += line.coins;
    rep.total_usd += line.usd;
    rep.lines.push_back(line);
  }
  return rep;
}

std::string format_usd(double usd) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "$%.2f", std::round(usd * 100.0) / 100.0);
  return buf;
}

std::string format_fee_table(const FeeSchedule& fees) {
  std::ostringstream os;
  os << "method\tgas\tusd\n";
  auto row = [&](std::string_view name, Method m) {
    os << name << '\t' << fees.gas(m) << '\t' << format_usd(fees.usd(m)) << '\n';
  };
  row("(contract creation)", Method::CreateContract);
  row("initChannel", Method::InitChannel);
  row("closeChannel", Method::CloseChannel);
  row("channelTimeout", Method::ChannelTimeout);
  os << "per-transaction (init+close)\t" << fees.init_gas + fees.close_gas << '\t'
     << format_usd(fees.usd(Method::InitChannel) + fees.usd(Method::CloseChannel)) << '\n';
  return os.str();
}

}  // namespace fairexec::ledger
