#include "fairexec/protocol.hpp"

#include <algorithm>

namespace fairexec::protocol {

std::string_view to_string(RequesterBehavior b) {
  switch (b) {
    case RequesterBehavior::Honest: return "honest";
    case RequesterBehavior::SkipUpdate: return "skip-update";
    case RequesterBehavior::Underpay: return "underpay";
    case RequesterBehavior::Overpay: return "overpay";
    case RequesterBehavior::ZeroAmount: return "zero-amount";
    case RequesterBehavior::BadSignature: return "bad-signature";
    case RequesterBehavior::ReplayUpdate: return "replay-update";
    case RequesterBehavior::WrongKeyHash: return "wrong-key-hash";
    case RequesterBehavior::WrongContract: return "wrong-contract";
    case RequesterBehavior::UpdateWithoutResult: return "update-without-result";
    case RequesterBehavior::ContinueInsteadOfUpdate: return "continue-instead-of-update";
    case RequesterBehavior::DoubleContinue: return "double-continue";
    case RequesterBehavior::ReplayContinue: return "replay-continue";
    case RequesterBehavior::OversizedContinue: return "oversized-continue";
    case RequesterBehavior::CrashAfterSign: return "crash-after-sign";
    case RequesterBehavior::StopContinuing: return "stop-continuing";
    case RequesterBehavior::EarlyTimeout: return "early-timeout";
    case RequesterBehavior::TerminateThenTimeout: return "terminate-then-timeout";
    case RequesterBehavior::Underfund: return "underfund";
    case RequesterBehavior::WrongExecutorAddress: return "wrong-executor-address";
    case RequesterBehavior::ShortTimeout: return "short-timeout";
  }
  return "unknown";
}

std::string_view to_string(ExecutorBehavior b) {
  switch (b) {
    case ExecutorBehavior::Honest: return "honest";
    case ExecutorBehavior::IgnoreRequest: return "ignore-request";
    case ExecutorBehavior::RejectRequest: return "reject-request";
    case ExecutorBehavior::WrongMeasurement: return "wrong-measurement";
    case ExecutorBehavior::CrashAfterReveal: return "crash-after-reveal";
    case ExecutorBehavior::CrashBeforeReveal: return "crash-before-reveal";
    case ExecutorBehavior::WithholdKeySettle: return "withhold-key-settle";
    case ExecutorBehavior::WithholdKeyNoSettle: return "withhold-key-no-settle";
    case ExecutorBehavior::RevealBeforePayment: return "reveal-before-payment";
    case ExecutorBehavior::WrongKey: return "wrong-key";
    case ExecutorBehavior::InflateCycles: return "inflate-cycles";
    case ExecutorBehavior::CorruptState: return "corrupt-state";
    case ExecutorBehavior::SwapKeyHash: return "swap-key-hash";
    case ExecutorBehavior::ReplayResult: return "replay-result";
    case ExecutorBehavior::ForeignEnclave: return "foreign-enclave";
    case ExecutorBehavior::StaleInput: return "stale-input";
    case ExecutorBehavior::RunAhead: return "run-ahead";
    case ExecutorBehavior::SlowResult: return "slow-result";
    case ExecutorBehavior::EarlyClose: return "early-close";
    case ExecutorBehavior::NeverSettle: return "never-settle";
    case ExecutorBehavior::OverclaimClose: return "overclaim-close";
    case ExecutorBehavior::WrongPreimageClose: return "wrong-preimage-close";
  }
  return "unknown";
}

const std::vector<RequesterBehavior>& all_requester_behaviors() {
  static const std::vector<RequesterBehavior> all = [] {
    std::vector<RequesterBehavior> v;
    for (int i = 1; i <= static_cast<int>(RequesterBehavior::ShortTimeout); ++i) {
      v.push_back(static_cast<RequesterBehavior>(i));
    }
    return v;
  }();
  return all;
}

const std::vector<ExecutorBehavior>& all_executor_behaviors() {
  static const std::vector<ExecutorBehavior> all = [] {
    std::vector<ExecutorBehavior> v;
    for (int i = 1; i <= static_cast<int>(ExecutorBehavior::WrongPreimageClose); ++i) {
      v.push_back(static_cast<ExecutorBehavior>(i));
    }
    return v;
  }();
  return all;
}

// ---------------------------------------------------------------- World

World::World(net::LinkModel link, net::FaultScript faults, ledger::FeeSchedule fees, Tick liveness_bound,
             Tick confirm_delay)
    : net_(sim_, link, std::move(faults)), ledger_(fees, liveness_bound, confirm_delay) {
  net_.set_variant_namer([](std::uint8_t v) { return std::string(to_string(static_cast<Variant>(v))); });
}

ActorId World::attach(Actor& actor) {
  actors_.push_back(&actor);
  return net_.add_actor(actor.name(), [&actor](const net::Envelope& e) { actor.deliver(e); });
}

void World::submit(Actor& actor, ledger::Transaction tx) {
  process_ledger();
  auto method = tx.method();
  ledger_.submit_tx(std::move(tx));
  net_.note(actor.id(), "submit " + std::string(ledger::to_string(method)));
  sim_.at(sim_.now() + ledger_.confirm_delay(), [this] { process_ledger(); });
}

void World::process_ledger() {
  auto receipts = ledger_.advance_to(sim_.now());
  for (const auto& r : receipts) {
    net_.note(net::kNoActor, "ledger " + std::string(ledger::to_string(r.method)) + " " +
                                 (r.ok() ? std::string("ok") : std::string(to_string(*r.error))));
    for (auto* a : actors_) {
      if (!a->offline()) a->on_receipt(r);
    }
  }
}

// ---------------------------------------------------------------- Actor

Actor::Actor(World& world, std::string name, crypto::SigningIdentity identity)
    : world_(world), name_(std::move(name)), identity_(std::move(identity)) {
  id_ = world_.attach(*this);
}

void Actor::deliver(const net::Envelope& env) {
  if (offline_) return;
  Message m;
  try {
    m = decode(env.bytes);
  } catch (const Error& e) {
    note(std::string("undecodable message: ") + e.what());
    return;
  }
  auto& last = last_seq_seen_[env.from];
  if (m.seq <= last) {
    note("stale sequence number " + std::to_string(m.seq));
    return;
  }
  last = m.seq;
  on_message(m, env.from);
}

void Actor::send(ActorId to, const ledger::ContractId& contract, Body body) {
  Message m{address(), ++seq_, contract, std::move(body)};
  auto bytes = encode(m);
  if (m.variant() == Variant::Continue) last_sent_continue_ = bytes;
  world_.net().send(id_, to, static_cast<std::uint8_t>(m.variant()), std::move(bytes));
}

void Actor::send_raw(ActorId to, Variant v, Bytes bytes) {
  world_.net().send(id_, to, static_cast<std::uint8_t>(v), std::move(bytes));
}

void Actor::arm_patience(Tick delay) {
  auto gen = ++patience_gen_;
  world_.sim().after(delay, [this, gen] {
    if (!offline_ && gen == patience_gen_) on_patience();
  });
}

void Actor::after(Tick delay, std::function<void()> fn) {
  world_.sim().after(delay, [this, fn = std::move(fn)] {
    if (!offline_) fn();
  });
}

void Actor::go_offline(const std::string& why) {
  note("offline: " + why);
  offline_ = true;
}

void Actor::note(const std::string& text) { world_.net().note(id_, text); }

// ---------------------------------------------------------------- Executor

Executor::Executor(World& world, std::string name, crypto::SigningIdentity identity, ExecutorConfig cfg,
                   std::uint64_t enclave_seed)
    : Actor(world, std::move(name), std::move(identity)), cfg_(cfg), rng_(enclave_seed) {}

void Executor::on_message(const Message& m, ActorId from) {
  switch (m.variant()) {
    case Variant::Request:
      on_request(std::get<Request>(m.body), m, from);
      break;
    case Variant::Continue:
      if (from != requester_ || m.sender != requester_addr_) return note("Continue from a stranger");
      on_continue(std::get<Continue>(m.body), m);
      break;
    case Variant::Update:
      if (from != requester_) return note("Update from a stranger");
      on_update(std::get<Update>(m.body));
      break;
    case Variant::Terminate:
      if (from != requester_ || m.sender != requester_addr_) return note("Terminate from a stranger");
      if (phase_ == Phase::Running) settle("requester terminated");
      break;
    default:
      note("ignoring " + std::string(to_string(m.variant())));
  }
}

void Executor::refuse(const std::string& why, bool tell_requester) {
  log_.refusals.push_back(why);
  note("refuse: " + why);
  if (tell_requester && requester_ != net::kNoActor) send(requester_, contract_, Reject{why});
}

void Executor::on_request(const Request& req, const Message& m, ActorId from) {
  if (phase_ != Phase::Idle) return note("already serving a request");
  if (behaves(ExecutorBehavior::IgnoreRequest)) return note("ignoring request");
  requester_ = from;
  requester_addr_ = m.sender;
  if (behaves(ExecutorBehavior::RejectRequest)) {
    phase_ = Phase::Settled;
    return refuse("not taking work", true);
  }
  try {
    program_ = workloads::workload_register().get(req.function_id).make_program();
  } catch (const Error& e) {
    phase_ = Phase::Settled;
    return refuse(e.what(), true);
  }
  if (req.state.schema_tag != program_->schema_tag()) {
    phase_ = Phase::Settled;
    return refuse(std::string(to_string(ErrorCode::SchemaMismatch)), true);
  }
  if (req.state.size_bytes() + program_->working_set_bytes(req.state) > cfg_.memory_limit) {
    phase_ = Phase::Settled;
    return refuse(std::string(to_string(ErrorCode::MemoryLimitExceeded)), true);
  }
  enclave_ = tee::Enclave::load(program_, rng_, cfg_.memory_limit, cfg_.overhead);
  if (behaves(ExecutorBehavior::ForeignEnclave)) {
    foreign_ = tee::Enclave::load(program_, rng_, cfg_.memory_limit, cfg_.overhead);
  }
  request_ = req;
  phase_ = Phase::Offered;
  Accept a{address(), enclave_->attestation_record()};
  if (behaves(ExecutorBehavior::WrongMeasurement)) {
    a.attestation.expected_measurement = crypto::hash(as_bytes("some other program"));
  }
  send(requester_, ledger::ContractId{}, a);
  arm_patience(cfg_.timing.patience + world_.ledger().liveness_bound());
}

bool Executor::channel_acceptable(const ledger::ContractId& id, std::uint64_t cycles, std::string& why) const {
  const auto& l = world_.ledger();
  if (!l.has_channel(id)) {
    why = "unknown channel";
    return false;
  }
  const auto& ch = l.channel(id);
  if (ch.status != ledger::ChannelStatus::Open) {
    why = "channel not open";
  } else if (ch.addr_r != requester_addr_) {
    why = "channel funded by another party";
  } else if (ch.addr_e != address()) {
    why = "channel pays a different executor";
  } else if (!contract_known_ && ch.deposit < request_->rate * request_->total_cycles) {
    why = "deposit below rate x cycles";
  } else if (log_.b + request_->rate * cycles > ch.deposit) {
    why = "round would exceed the deposit";
  } else if (world_.now() + l.liveness_bound() + cfg_.timing.settle_margin >= ch.timeout) {
    why = "timeout too close to settle safely";
  } else {
    return true;
  }
  return false;
}

void Executor::on_continue(const Continue& c, const Message& m) {
  if (phase_ == Phase::Idle) return note("Continue before any request");
  if (phase_ == Phase::Settled) return refuse("session is over", true);
  if (pending_) return refuse("previous round is unpaid", false);
  if (c.cycles == 0) return refuse("zero-cycle round", true);
  if (contract_known_ && m.contract != contract_) return refuse("Continue names another channel", false);
  std::string why;
  if (!channel_acceptable(m.contract, c.cycles, why)) {
    if (!contract_known_) phase_ = Phase::Settled;
    return refuse(why, true);
  }
  if (!contract_known_) {
    contract_ = m.contract;
    contract_known_ = true;
    log_.contract = contract_;
    phase_ = Phase::Running;
    const auto& ch = world_.ledger().channel(contract_);
    Tick deadline = ch.timeout - world_.ledger().liveness_bound() - cfg_.timing.settle_margin;
    after(deadline - world_.now(), [this] {
      if (phase_ == Phase::Running) settle("safety deadline");
    });
  }
  run_round(c.cycles);
}

void Executor::run_round(std::uint64_t cycles) {
  const auto mode = request_->mode;
  const auto index = round_index_++;
  auto at = [&](ExecutorBehavior b) { return behaves(b) && index == cfg_.overlay.round; };

  if (at(ExecutorBehavior::ReplayResult) && last_result_) {
    note("replaying an earlier result");
    auto body = *last_result_;
    after(cfg_.overhead.enter_exit_ticks, [this, body] { send(requester_, contract_, body); });
    arm_patience(cfg_.timing.patience);
    return;
  }

  tee::Enclave::Execution x;
  if (at(ExecutorBehavior::ForeignEnclave)) {
    x = foreign_->execute(request_->state, cycles, mode);
  } else if (at(ExecutorBehavior::StaleInput)) {
    MState stale = request_->state;
    if (index == 0 && !stale.blob.empty()) stale.blob.back() ^= 1;
    x = enclave_->execute(stale, cycles, mode);
  } else if (index == 0) {
    x = enclave_->execute(request_->state, cycles, mode);
  } else {
    x = enclave_->resume(cycles, mode);
  }
  ++log_.rounds_executed;
  ++unpaid_;
  log_.max_unpaid = std::max(log_.max_unpaid, unpaid_);
  pending_ = Pending{x.round_id, x.result.key_hash, log_.b + x.result.cycles_done * request_->rate};
  pending_index_ = index;

  if (at(ExecutorBehavior::InflateCycles)) x.result.cycles_done += 1;
  if (at(ExecutorBehavior::CorruptState) && !x.result.enc_state.payload.empty()) {
    x.result.enc_state.payload[x.result.enc_state.payload.size() / 2] ^= 0x40;
  }
  if (at(ExecutorBehavior::SwapKeyHash)) x.result.key_hash = crypto::hash(as_bytes("not the key"));

  Tick delay = x.enclave_ticks;
  if (at(ExecutorBehavior::SlowResult)) delay += 2 * cfg_.timing.patience;
  RoundResult body{x.round_id, cycles, x.result};
  const bool crash = at(ExecutorBehavior::CrashBeforeReveal);
  const bool duplicate = at(ExecutorBehavior::ReplayResult);
  after(delay, [this, body, crash, duplicate] {
    send(requester_, contract_, body);
    if (duplicate) send(requester_, contract_, body);
    last_result_ = body;
    if (crash) go_offline("crash before revealing the key");
  });
  if (at(ExecutorBehavior::RevealBeforePayment)) {
    auto round = x.round_id;
    after(delay, [this, round] { reveal(round); });
  }
  if (at(ExecutorBehavior::RunAhead)) {
    auto extra = enclave_->resume(cycles, mode);
    ++log_.rounds_executed;
    ++unpaid_;
    log_.max_unpaid = std::max(log_.max_unpaid, unpaid_);
    RoundResult ahead{extra.round_id, cycles, extra.result};
    after(delay + extra.enclave_ticks, [this, ahead] { send(requester_, contract_, ahead); });
  }
  arm_patience(delay + cfg_.timing.patience);
}

void Executor::reveal(std::uint64_t round_id) {
  auto k = enclave_->reveal_key(round_id);
  log_.revealed_key_hashes.push_back(crypto::hash_key(k));
  send(requester_, contract_, KeyReveal{round_id, k});
}

void Executor::on_update(const Update& u) {
  if (phase_ != Phase::Running) return refuse("no session for this update", false);
  if (!pending_) return refuse("update without a pending round", false);
  if (u.update.id != contract_) return refuse("update names another channel", false);
  if (u.update.key_hash != pending_->key_hash) return refuse("update for a different round", false);
  if (u.update.v != pending_->expected_v) {
    return refuse(std::string(to_string(ErrorCode::WrongAmount)) + ": got " + std::to_string(u.update.v) +
                      ", expected " + std::to_string(pending_->expected_v),
                  false);
  }
  if (!ledger::verify_update(u.update, requester_addr_)) {
    return refuse(std::string(to_string(ErrorCode::BadUpdateSignature)), false);
  }
  latest_update_ = u.update;
  latest_key_ = enclave_->reveal_key(pending_->round_id);
  latest_round_ = pending_->round_id;
  log_.accepted_updates.push_back(u.update);
  log_.b = u.update.v;
  if (unpaid_ > 0) --unpaid_;
  auto round = pending_->round_id;
  auto index = pending_index_;
  pending_.reset();
  auto at = [&](ExecutorBehavior b) { return behaves(b) && index == cfg_.overlay.round; };

  if (at(ExecutorBehavior::WithholdKeySettle)) return settle("withholding the key");
  if (at(ExecutorBehavior::WithholdKeyNoSettle)) {
    note("withholding the key and walking away");
    phase_ = Phase::Settled;
    cancel_patience();
    return;
  }
  if (at(ExecutorBehavior::WrongKey)) {
    crypto::SymmetricKey bogus = crypto::generate_key(rng_);
    send(requester_, contract_, KeyReveal{round, bogus});
  } else if (!(at(ExecutorBehavior::RevealBeforePayment))) {
    reveal(round);
  }
  if (at(ExecutorBehavior::CrashAfterReveal)) return go_offline("crash after revealing the key");
  if (at(ExecutorBehavior::EarlyClose)) return settle("closing early");
  arm_patience(cfg_.timing.patience);
}

void Executor::on_patience() {
  if (phase_ == Phase::Offered) {
    note("no channel appeared; giving up");
    phase_ = Phase::Settled;
  } else if (phase_ == Phase::Running) {
    settle("requester went quiet");
  }
}

void Executor::settle(const std::string& why) {
  if (phase_ != Phase::Running) return;
  phase_ = Phase::Settled;
  cancel_patience();
  note("settle: " + why);
  if (behaves(ExecutorBehavior::NeverSettle)) return note("never settling");
  if (!latest_update_) return note("nothing to settle");
  auto v = latest_update_->v;
  auto kh = latest_update_->key_hash;
  auto k = latest_key_;
  if (behaves(ExecutorBehavior::OverclaimClose)) v += 1;
  if (behaves(ExecutorBehavior::WrongPreimageClose)) k = crypto::generate_key(rng_);
  auto sig_e = identity_.sign(ledger::state_hash(contract_, v, kh));
  ledger::CloseChannelTx tx{contract_, latest_update_->sig, sig_e, v, kh, k};
  settle_submitted_ = true;
  world_.submit(*this, ledger::Transaction{address(), tx});
}

void Executor::on_receipt(const ledger::Receipt& r) {
  if (!contract_known_ || r.contract != contract_ || !r.ok()) return;
  if (r.method == ledger::Method::ChannelTimeout && phase_ == Phase::Running) {
    note("channel refunded before settlement");
    phase_ = Phase::Settled;
    cancel_patience();
  }
}

// ---------------------------------------------------------------- Requester

Requester::Requester(World& world, std::string name, crypto::SigningIdentity identity, RequesterConfig cfg,
                     std::shared_ptr<const Program> program, std::vector<ActorId> executors)
    : Actor(world, std::move(name), std::move(identity)),
      cfg_(std::move(cfg)),
      program_(std::move(program)),
      expected_measurement_(tee::measure(*program_)),
      executors_(std::move(executors)),
      state_(cfg_.initial_state) {}

void Requester::start() { open_session(); }

void Requester::open_session() {
  cancel_patience();
  pending_.reset();
  if (remaining() == 0 || next_executor_ >= executors_.size()) return finish();
  ChannelSession s;
  s.executor = executors_[next_executor_++];
  s.cycles_budget = remaining();
  log_.sessions.push_back(s);
  session_round_ = 0;
  previous_update_.reset();
  phase_ = Phase::AwaitAccept;
  send(s.executor, ledger::ContractId{},
       Request{cfg_.function_id, state_, remaining(), cfg_.rate, cfg_.mode});
  arm_patience(cfg_.timing.patience);
}

void Requester::finish() {
  phase_ = Phase::Finished;
  cancel_patience();
}

void Requester::abandon(const std::string& why) {
  log_.rejections.push_back(why);
  note("abandon: " + why);
  open_session();
}

void Requester::on_message(const Message& m, ActorId from) {
  if (phase_ == Phase::Finished) return note("finished; ignoring " + std::string(to_string(m.variant())));
  if (log_.sessions.empty() || from != session().executor) return note("message from a previous executor");
  switch (m.variant()) {
    case Variant::Accept:
      if (phase_ == Phase::AwaitAccept) on_accept(std::get<Accept>(m.body), from);
      break;
    case Variant::Reject:
      if (phase_ == Phase::AwaitKey || phase_ == Phase::AwaitLedgerKey) {
        note("rejection while a paid round is outstanding");
      } else if (phase_ != Phase::AwaitChannel) {
        abandon("rejected: " + std::get<Reject>(m.body).reason);
      }
      break;
    case Variant::RoundResult:
      on_result(std::get<RoundResult>(m.body), m);
      break;
    case Variant::KeyReveal:
      if (phase_ == Phase::AwaitKey || phase_ == Phase::AwaitLedgerKey) {
        on_key(std::get<KeyReveal>(m.body).key, KeySource::Message);
      }
      break;
    default:
      note("ignoring " + std::string(to_string(m.variant())));
  }
}

void Requester::on_accept(const Accept& a, ActorId) {
  if (a.attestation.expected_measurement != expected_measurement_) {
    return abandon(std::string(to_string(ErrorCode::AttestationInvalid)) + ": unexpected measurement");
  }
  auto& s = session();
  s.executor_addr = a.executor;
  s.attestation = a.attestation;
  s.deposit = cfg_.deposit.value_or(cfg_.rate * remaining());
  if (behaves(RequesterBehavior::Underfund) && s.deposit > 0) s.deposit -= 1;
  auto addr_e = a.executor;
  if (behaves(RequesterBehavior::WrongExecutorAddress)) addr_e.bytes[0] ^= 0xff;
  s.timeout = world_.now() + cfg_.timing.timeout_span;
  if (behaves(RequesterBehavior::ShortTimeout)) s.timeout = world_.now() + world_.ledger().liveness_bound() + 1;
  phase_ = Phase::AwaitChannel;
  cancel_patience();
  world_.submit(*this, ledger::Transaction{address(), ledger::InitChannelTx{address(), addr_e, s.timeout, s.deposit}});
}

void Requester::on_receipt(const ledger::Receipt& r) {
  if (r.submitter == address() && r.method == ledger::Method::InitChannel && phase_ == Phase::AwaitChannel) {
    if (!r.ok()) return abandon("initChannel failed: " + std::string(to_string(*r.error)));
    session().contract = r.contract;
    watch_timeout(log_.sessions.size() - 1);
    return request_round();
  }
  if (!r.ok() || (r.method != ledger::Method::CloseChannel && r.method != ledger::Method::ChannelTimeout)) return;
  for (auto& s : log_.sessions) {
    if (s.contract && *s.contract == r.contract) s.resolved = true;
  }
  if (!log_.sessions.empty() && session().contract && *session().contract == r.contract &&
      (phase_ == Phase::AwaitKey || phase_ == Phase::AwaitLedgerKey)) {
    poll_ledger_key();
  }
}

void Requester::watch_timeout(std::size_t index) {
  auto timeout = log_.sessions[index].timeout;
  after(timeout - std::min(timeout, world_.now()), [this, index] {
    const auto& s = log_.sessions[index];
    const auto& ch = world_.ledger().channel(*s.contract);
    if (ch.status == ledger::ChannelStatus::Open) {
      note("channel timed out; claiming refund");
      world_.submit(*this, ledger::Transaction{address(), ledger::ChannelTimeoutTx{*s.contract}});
    }
  });
}

void Requester::request_round() {
  auto& s = session();
  std::uint64_t c = std::min(cfg_.cycles_per_round, remaining());
  if (behaves_now(RequesterBehavior::OversizedContinue)) c = s.cycles_budget * 10 + 1;
  if (behaves_now(RequesterBehavior::UpdateWithoutResult)) {
    auto bogus = ledger::sign_update(identity_, *s.contract, s.b + cfg_.rate, crypto::hash(as_bytes("nothing")));
    send(s.executor, *s.contract, Update{bogus});
  }
  requested_cycles_ = c;
  phase_ = Phase::AwaitResult;
  if (!log_.started) log_.started = world_.now();
  send(s.executor, *s.contract, Continue{c});
  if (behaves_now(RequesterBehavior::DoubleContinue)) send(s.executor, *s.contract, Continue{c});
  arm_patience(cfg_.timing.patience);
}

void Requester::on_result(const RoundResult& r, const Message& m) {
  if (phase_ != Phase::AwaitResult) return note("unexpected RoundResult");
  auto& s = session();
  if (m.contract != *s.contract) return note("RoundResult for another channel");
  const auto& w = r.result;
  if (std::find(seen_key_hashes_.begin(), seen_key_hashes_.end(), w.key_hash) != seen_key_hashes_.end()) {
    return note("replayed RoundResult");
  }
  seen_key_hashes_.push_back(w.key_hash);
  if (!tee::verify_attested(w, s.attestation.expected_measurement, s.attestation.attestation_address)) {
    return abandon(std::string(to_string(ErrorCode::AttestationInvalid)));
  }
  if (w.input_digest != crypto::hash(state_.blob)) return abandon("result computed from a different state");
  if (w.mode != cfg_.mode) return abandon("result in the wrong mode");
  if (w.cycles_done > requested_cycles_) return abandon("more cycles than requested");
  if (w.cycles_done == 0 && !w.terminal) return abandon("round made no progress");
  ledger::Coins v = s.b + w.cycles_done * cfg_.rate;
  if (v > s.deposit) return abandon("result would exceed the deposit");

  pending_ = PendingRound{r, {}, 0};
  phase_ = Phase::AwaitKey;
  arm_patience(cfg_.timing.patience);

  if (behaves_now(RequesterBehavior::SkipUpdate)) return note("not paying for this round");
  if (behaves_now(RequesterBehavior::ContinueInsteadOfUpdate)) {
    send(s.executor, *s.contract, Continue{requested_cycles_});
    return;
  }
  ledger::Coins signed_v = v;
  if (behaves_now(RequesterBehavior::Underpay)) signed_v = v - 1;
  if (behaves_now(RequesterBehavior::Overpay)) signed_v = v + 1;
  if (behaves_now(RequesterBehavior::ZeroAmount)) signed_v = s.b;
  if (behaves_now(RequesterBehavior::BadSignature)) {
    crypto::Rng rng(w.key_hash.bytes[0]);
    auto stranger = crypto::SigningIdentity::generate(rng);
    send(s.executor, *s.contract, Update{ledger::sign_update(stranger, *s.contract, v, w.key_hash)});
    return;
  }
  if (behaves_now(RequesterBehavior::ReplayUpdate)) {
    auto old = previous_update_.value_or(
        ledger::sign_update(identity_, *s.contract, s.b, crypto::hash(as_bytes("no earlier round"))));
    send(s.executor, *s.contract, Update{old});
    return;
  }
  auto key_hash = w.key_hash;
  auto contract = *s.contract;
  if (behaves_now(RequesterBehavior::WrongKeyHash)) key_hash = crypto::hash(as_bytes("wrong key"));
  if (behaves_now(RequesterBehavior::WrongContract)) contract = crypto::hash(as_bytes("another channel"));
  auto u = ledger::sign_update(identity_, contract, signed_v, key_hash);
  log_.paid.push_back(PaidResult{log_.sessions.size() - 1, r, u, state_, s.attestation});
  pending_->update = u;
  pending_->paid_index = log_.paid.size() - 1;
  if (signed_v == v && key_hash == w.key_hash && contract == *s.contract) s.b = v;
  send(s.executor, *s.contract, Update{u});

  if (behaves_now(RequesterBehavior::ReplayContinue) && !last_sent_continue_.empty()) {
    send_raw(s.executor, Variant::Continue, last_sent_continue_);
  }
  if (behaves_now(RequesterBehavior::EarlyTimeout)) {
    world_.submit(*this, ledger::Transaction{address(), ledger::ChannelTimeoutTx{*s.contract}});
  }
  if (behaves_now(RequesterBehavior::CrashAfterSign)) go_offline("crash after signing");
}

void Requester::on_key(const crypto::SymmetricKey& k, KeySource source) {
  if (!pending_) return;
  const auto& w = pending_->result.result;
  if (crypto::hash_key(k) != w.key_hash) return note("key does not match the pending result");
  MState next;
  OutBuffer out;
  try {
    auto state_bytes = crypto::decrypt(k, w.enc_state);
    out = deserialize_out(crypto::decrypt(k, w.enc_out));
    next = w.mode == tee::ResultMode::FullState ? deserialize_state(state_bytes)
                                                : apply_diff(state_, deserialize_diff(state_bytes));
  } catch (const Error& e) {
    return abandon(std::string("cannot open result: ") + e.what());
  }
  log_.keys.push_back(ObtainedKey{log_.sessions.size() - 1, w.key_hash, k, source, session().executor});
  state_ = std::move(next);
  outputs_.extend(out);
  log_.cycles_completed += w.cycles_done;
  ++log_.rounds_completed;
  log_.last_progress = world_.now();
  previous_update_ = pending_->update;
  const bool terminal = w.terminal;
  pending_.reset();
  cancel_patience();
  const auto round = session_round_++;
  auto& s = session();

  auto at = [&](RequesterBehavior b) { return behaves(b) && round == cfg_.overlay.round; };
  if (terminal || remaining() == 0) {
    log_.completed = true;
    log_.finished = world_.now();
    if (source == KeySource::Message) send(s.executor, *s.contract, Terminate{});
    return finish();
  }
  if (at(RequesterBehavior::StopContinuing)) {
    note("going quiet");
    return finish();
  }
  if (at(RequesterBehavior::TerminateThenTimeout)) {
    send(s.executor, *s.contract, Terminate{});
    world_.submit(*this, ledger::Transaction{address(), ledger::ChannelTimeoutTx{*s.contract}});
    return finish();
  }
  if (source == KeySource::Ledger) {
    // The executor closed the channel to publish the key; move on.
    return open_session();
  }
  request_round();
}

void Requester::on_patience() {
  switch (phase_) {
    case Phase::AwaitAccept: return abandon("no answer to Request");
    case Phase::AwaitResult: return abandon("no RoundResult");
    case Phase::AwaitKey:
      phase_ = Phase::AwaitLedgerKey;
      note("no KeyReveal; watching the ledger");
      return poll_ledger_key();
    case Phase::AwaitLedgerKey: return poll_ledger_key();
    default: return;
  }
}

void Requester::poll_ledger_key() {
  auto& s = session();
  const auto& ch = world_.ledger().channel(*s.contract);
  if (ch.published_key) {
    if (pending_ && crypto::hash_key(*ch.published_key) == pending_->result.result.key_hash) {
      return on_key(*ch.published_key, KeySource::Ledger);
    }
    return abandon("channel closed without the pending key");
  }
  if (ch.status == ledger::ChannelStatus::Destroyed) return abandon("channel refunded");
  phase_ = Phase::AwaitLedgerKey;
  arm_patience(cfg_.timing.patience);
}

}  // namespace fairexec::protocol
