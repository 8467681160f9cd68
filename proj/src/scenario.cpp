#include "fairexec/scenario.hpp"

#include <algorithm>

namespace fairexec::protocol {

namespace {

constexpr ledger::Coins kRequesterFunds = 1'000'000'000'000'000'000ull;
constexpr ledger::Coins kExecutorFunds = 100'000'000'000'000'000ull;

struct Mutator {
  void operator()(Request& b) {
    if (!b.state.blob.empty()) b.state.blob.back() ^= 1;
  }
  void operator()(Accept& b) { b.attestation.attestation_address.bytes[0] ^= 1; }
  void operator()(Reject& b) { b.reason += "?"; }
  void operator()(RoundResult& b) { b.result.cycles_done += 1; }
  void operator()(Update& b) { b.update.v += 1; }
  void operator()(KeyReveal& b) { b.key.bytes[0] ^= 1; }
  void operator()(Continue& b) { b.cycles += 1; }
  void operator()(Terminate&) {}
};

}  // namespace

Bytes tamper_message(const Bytes& bytes) {
  Message m;
  try {
    m = decode(bytes);
  } catch (const Error&) {
    Bytes out = bytes;
    if (!out.empty()) out.back() ^= 1;
    return out;
  }
  if (m.variant() == Variant::Terminate) {
    m.sender.bytes[0] ^= 1;
  } else {
    std::visit(Mutator{}, m.body);
  }
  return encode(m);
}

namespace {

bool holds_key(const RequesterLog& log, const crypto::Digest& kh) {
  return std::any_of(log.keys.begin(), log.keys.end(), [&](const ObtainedKey& k) { return k.key_hash == kh; });
}

void check_properties(const ScenarioConfig& cfg, const World& world, const Requester& r,
                      const std::vector<std::unique_ptr<Executor>>& executors, PropertyReport& rep) {
  const auto& l = world.ledger();
  auto fail = [&](std::string s) { rep.violations.push_back(std::move(s)); };

  if (l.total_supply() != l.minted()) fail("coin conservation broken");
  for (const auto& [id, ch] : l.channels()) {
    if (ch.paid_to_executor > ch.deposit) fail("channel paid more than its deposit");
    if (ch.status == ledger::ChannelStatus::Destroyed && ch.refunded_to_requester != ch.deposit) {
      fail("timeout refund was not the full deposit");
    }
    if (ch.status == ledger::ChannelStatus::Closed && !ch.published_key) fail("close did not publish the key");
  }

  const auto& rlog = r.log();
  const bool requester_honest = cfg.requester.honest();

  if (requester_honest) {
    rep.requester_safety_checked = true;
    // Anything the executor was paid must buy a key the requester holds for a
    // result it signed for, at exactly the settled amount.
    for (const auto& [id, ch] : l.channels()) {
      if (ch.addr_r != r.address() || ch.paid_to_executor == 0) continue;
      auto kh = crypto::hash_key(*ch.published_key);
      auto it = std::find_if(rlog.paid.begin(), rlog.paid.end(), [&](const PaidResult& p) {
        return p.update.id == id && p.update.key_hash == kh;
      });
      if (it == rlog.paid.end()) {
        fail("requester_safety: executor paid without a matching signed update");
        continue;
      }
      if (it->update.v != ch.paid_to_executor) fail("requester_safety: payout differs from the signed amount");
      if (!holds_key(rlog, kh)) fail("requester_safety: executor paid but requester never obtained the key");
      try {
        crypto::decrypt(*ch.published_key, it->result.result.enc_state);
        crypto::decrypt(*ch.published_key, it->result.result.enc_out);
      } catch (const Error&) {
        fail("requester_safety: published key does not open the paid result");
      }
    }
    for (const auto& p : rlog.paid) {
      if (!tee::verify_attested(p.result.result, p.attestation.expected_measurement,
                                p.attestation.attestation_address)) {
        fail("requester signed for a result that fails attestation");
      }
      if (p.result.result.input_digest != crypto::hash(p.base.blob)) {
        fail("requester signed for a result computed on another state");
      }
    }
  }

  for (std::size_t i = 0; i < executors.size(); ++i) {
    const auto& e = *executors[i];
    const bool honest = i > 0 || cfg.executor.honest();
    const auto& elog = e.log();
    auto has_update = [&](const crypto::Digest& kh) {
      return std::any_of(elog.accepted_updates.begin(), elog.accepted_updates.end(),
                         [&](const ledger::ChannelUpdate& u) { return u.key_hash == kh; });
    };
    if (!honest) continue;
    rep.max_unpaid_rounds = std::max(rep.max_unpaid_rounds, elog.max_unpaid);
    rep.executor_safety_checked = true;
    rep.bounded_loss_checked = true;
    for (const auto& k : rlog.keys) {
      if (k.executor == e.id() && !has_update(k.key_hash)) {
        fail("executor_safety: requester holds a key for a round " + e.name() + " was not paid for");
      }
    }
    for (const auto& kh : elog.revealed_key_hashes) {
      if (!has_update(kh)) fail("executor_safety: " + e.name() + " revealed a key without a signed update");
    }
    if (elog.max_unpaid > 1 || elog.rounds_executed > elog.accepted_updates.size() + 1) {
      fail("bounded_loss: " + e.name() + " executed more than one unpaid round");
    }
  }

  if (!cfg.adversarial()) {
    rep.coherence_checked = true;
    ledger::Coins total_b = 0;
    for (std::size_t s = 0; s < rlog.sessions.size(); ++s) {
      const auto& sess = rlog.sessions[s];
      total_b += sess.b;
      for (const auto& e : executors) {
        if (e->id() == sess.executor && e->log().b != sess.b) fail("requester and executor disagree on b");
      }
    }
    if (total_b != cfg.rate * rlog.cycles_completed) fail("b differs from rate x cycles");
  }
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  crypto::Rng master(cfg.seed);
  auto instance = workloads::workload_register().instantiate(cfg.workload, cfg.params, master);

  // Actors are attached in construction order: the requester is 0 and the
  // executors follow, so faults can name them before the world exists.
  net::FaultScript script;
  for (const auto& f : cfg.faults) {
    net::FaultDirective d;
    d.from = f.party == Party::Requester ? 0 : 1;
    d.variant = static_cast<std::uint8_t>(f.variant);
    d.index = f.index;
    d.action = f.action;
    d.delay = f.delay;
    if (f.action == net::FaultAction::Tamper) d.mutate = tamper_message;
    script.directives.push_back(std::move(d));
  }
  World world(cfg.link, std::move(script), cfg.fees, cfg.liveness_bound, cfg.confirm_delay);

  auto r_identity = crypto::SigningIdentity::generate(master);
  std::vector<std::unique_ptr<Executor>> executors;
  std::vector<ActorId> executor_ids;
  RequesterConfig rc;
  rc.function_id = cfg.workload;
  rc.initial_state = instance.initial_state;
  rc.total_cycles = cfg.total_cycles;
  rc.cycles_per_round = cfg.cycles_per_round;
  rc.rate = cfg.rate;
  rc.deposit = cfg.deposit;
  rc.mode = cfg.mode;
  rc.timing = cfg.timing;
  rc.overlay = cfg.requester;
  for (std::size_t i = 0; i < cfg.executors; ++i) executor_ids.push_back(static_cast<ActorId>(i + 1));
  Requester requester(world, "R", std::move(r_identity), rc, instance.program, executor_ids);
  for (std::size_t i = 0; i < cfg.executors; ++i) {
    ExecutorConfig ec;
    if (i == 0) ec.overlay = cfg.executor;
    ec.memory_limit = cfg.memory_limit;
    ec.overhead = cfg.overhead;
    ec.timing = cfg.timing;
    auto id = crypto::SigningIdentity::generate(master);
    auto seed = master.next_u64();
    executors.push_back(std::make_unique<Executor>(world, "E" + std::to_string(i), std::move(id), ec, seed));
  }

  world.ledger().mint(requester.address(), kRequesterFunds);
  for (const auto& e : executors) world.ledger().mint(e->address(), kExecutorFunds);

  requester.start();
  world.sim().run_until_quiescent(cfg.tick_limit);

  ScenarioResult out;
  out.initial_state = instance.initial_state;
  out.final_state = requester.current_state();
  out.outputs = requester.outputs();
  out.completed = requester.log().completed;
  out.cycles_completed = requester.log().cycles_completed;
  out.requester = requester.log();
  for (const auto& e : executors) out.executors.push_back(e->log());
  for (const auto& [_, ch] : world.ledger().channels()) out.channels.push_back(ch);
  out.receipts = world.ledger().receipts();
  out.trace = world.net().format_trace();
  out.ledger_trace = world.ledger().trace_log();
  out.end_tick = world.sim().now();
  out.traffic = world.net().totals();
  out.in_flight_at_end = world.net().in_flight();

  auto& m = out.metrics;
  const auto& rlog = requester.log();
  m.rounds = rlog.rounds_completed;
  for (const auto& e : executors) {
    m.bytes_r_to_e += world.net().traffic(requester.id(), e->id()).sent_bytes;
    m.bytes_e_to_r += world.net().traffic(e->id(), requester.id()).sent_bytes;
    if (const auto* enc = e->enclave()) {
      m.enclave_calls += enc->call_counter();
      m.enclave_time_ticks += enc->total_time_ticks();
    }
  }
  if (rlog.started) {
    Tick end = rlog.finished.value_or(std::max(rlog.last_progress, *rlog.started));
    m.latency_ticks = end - *rlog.started;
  }
  for (const auto& rec : out.receipts) {
    if (rec.submitter == requester.address()) m.fees_r += rec.fee;
    for (const auto& e : executors) {
      if (rec.submitter == e->address()) m.fees_e += rec.fee;
    }
  }
  std::size_t closed = 0, refunded = 0;
  for (const auto& ch : out.channels) {
    if (ch.status == ledger::ChannelStatus::Closed) ++closed;
    if (ch.status == ledger::ChannelStatus::Destroyed) ++refunded;
  }
  if (rlog.completed) {
    m.outcome = refunded == 0 ? "completed" : "completed-refunded";
  } else if (rlog.sessions.empty() || out.channels.empty()) {
    m.outcome = "no-channel";
  } else {
    m.outcome = closed > 0 ? "partial" : "refunded";
  }

  check_properties(cfg, world, requester, executors, out.properties);
  return out;
}

}  // namespace fairexec::protocol
