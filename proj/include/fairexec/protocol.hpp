#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairexec/ledger.hpp"
#include "fairexec/messages.hpp"
#include "fairexec/net_sim.hpp"
#include "fairexec/tee.hpp"
#include "fairexec/workloads/catalog.hpp"

namespace fairexec::protocol {

using net::ActorId;
using net::Tick;

struct Timing {
  // How long either party waits for the next protocol message.
  Tick patience = 500'000;
  // Channel timeout, measured from when the requester submits initChannel.
  Tick timeout_span = 20'000'000;
  // An executor settles no later than timeout - liveness bound - this margin.
  Tick settle_margin = 1'000'000;
};

// Scripted deviations. `round` is the 0-based round the deviation targets;
// behaviours tied to setup or settlement ignore it.
enum class RequesterBehavior : std::uint8_t {
  Honest,
  SkipUpdate,
  Underpay,
  Overpay,
  ZeroAmount,
  BadSignature,
  ReplayUpdate,
  WrongKeyHash,
  WrongContract,
  UpdateWithoutResult,
  ContinueInsteadOfUpdate,
  DoubleContinue,
  ReplayContinue,
  OversizedContinue,
  CrashAfterSign,
  StopContinuing,
  EarlyTimeout,
  TerminateThenTimeout,
  Underfund,
  WrongExecutorAddress,
  ShortTimeout,
};

enum class ExecutorBehavior : std::uint8_t {
  Honest,
  IgnoreRequest,
  RejectRequest,
  WrongMeasurement,
  CrashAfterReveal,
  CrashBeforeReveal,
  WithholdKeySettle,
  WithholdKeyNoSettle,
  RevealBeforePayment,
  WrongKey,
  InflateCycles,
  CorruptState,
  SwapKeyHash,
  ReplayResult,
  ForeignEnclave,
  StaleInput,
  RunAhead,
  SlowResult,
  EarlyClose,
  NeverSettle,
  OverclaimClose,
  WrongPreimageClose,
};

std::string_view to_string(RequesterBehavior b);
std::string_view to_string(ExecutorBehavior b);
const std::vector<RequesterBehavior>& all_requester_behaviors();
const std::vector<ExecutorBehavior>& all_executor_behaviors();

struct RequesterOverlay {
  RequesterBehavior behavior = RequesterBehavior::Honest;
  std::uint64_t round = 0;
  bool honest() const { return behavior == RequesterBehavior::Honest; }
};

struct ExecutorOverlay {
  ExecutorBehavior behavior = ExecutorBehavior::Honest;
  std::uint64_t round = 0;
  bool honest() const { return behavior == ExecutorBehavior::Honest; }
};

class World;

// Shared plumbing for both actor kinds: identity, sequence numbers, timers.
class Actor {
 public:
  Actor(World& world, std::string name, crypto::SigningIdentity identity);
  virtual ~Actor() = default;

  ActorId id() const { return id_; }
  const std::string& name() const { return name_; }
  const crypto::Address& address() const { return identity_.address(); }
  bool offline() const { return offline_; }

  void deliver(const net::Envelope& env);
  virtual void on_receipt(const ledger::Receipt&) {}

 protected:
  virtual void on_message(const Message& m, ActorId from) = 0;

  void send(ActorId to, const ledger::ContractId& contract, Body body);
  void send_raw(ActorId to, Variant v, Bytes bytes);
  // Re-arming invalidates the previous patience timer.
  void arm_patience(Tick delay);
  void cancel_patience() { ++patience_gen_; }
  virtual void on_patience() {}
  void after(Tick delay, std::function<void()> fn);
  void go_offline(const std::string& why);
  void note(const std::string& text);

  World& world_;
  std::string name_;
  crypto::SigningIdentity identity_;
  ActorId id_ = net::kNoActor;
  std::uint64_t seq_ = 0;
  std::map<ActorId, std::uint64_t> last_seq_seen_;
  std::uint64_t patience_gen_ = 0;
  bool offline_ = false;
  Bytes last_sent_continue_;
};

struct ExecutorConfig {
  ExecutorOverlay overlay;
  std::uint64_t memory_limit = tee::kDefaultMemoryLimit;
  tee::OverheadModel overhead;
  Timing timing;
};

// What an executor did, for the property checks.
struct ExecutorLog {
  std::uint64_t rounds_executed = 0;
  std::vector<ledger::ChannelUpdate> accepted_updates;
  std::vector<crypto::Digest> revealed_key_hashes;
  std::vector<std::string> refusals;
  std::optional<ledger::ContractId> contract;
  ledger::Coins b = 0;
  std::uint64_t max_unpaid = 0;
};

class Executor final : public Actor {
 public:
  Executor(World& world, std::string name, crypto::SigningIdentity identity, ExecutorConfig cfg,
           std::uint64_t enclave_seed);

  const ExecutorLog& log() const { return log_; }
  const tee::Enclave* enclave() const { return enclave_ ? &*enclave_ : nullptr; }

  void on_receipt(const ledger::Receipt& r) override;

 private:
  enum class Phase : std::uint8_t { Idle, Offered, Running, Settled };
  struct Pending {
    std::uint64_t round_id = 0;
    crypto::Digest key_hash;
    ledger::Coins expected_v = 0;
  };

  void on_message(const Message& m, ActorId from) override;
  void on_patience() override;
  void on_request(const Request& req, const Message& m, ActorId from);
  void on_continue(const Continue& c, const Message& m);
  void on_update(const Update& u);
  void refuse(const std::string& why, bool tell_requester);
  bool channel_acceptable(const ledger::ContractId& id, std::uint64_t cycles, std::string& why) const;
  void run_round(std::uint64_t cycles);
  void reveal(std::uint64_t round_id);
  void settle(const std::string& why);
  bool behaves(ExecutorBehavior b) const { return cfg_.overlay.behavior == b; }

  ExecutorConfig cfg_;
  crypto::Rng rng_;
  Phase phase_ = Phase::Idle;
  ActorId requester_ = net::kNoActor;
  crypto::Address requester_addr_;
  std::optional<Request> request_;
  std::shared_ptr<const Program> program_;
  std::optional<tee::Enclave> enclave_;
  std::optional<tee::Enclave> foreign_;
  ledger::ContractId contract_;
  bool contract_known_ = false;
  std::optional<Pending> pending_;
  std::optional<ledger::ChannelUpdate> latest_update_;
  crypto::SymmetricKey latest_key_;
  std::uint64_t latest_round_ = 0;
  std::uint64_t round_index_ = 0;  // rounds executed so far in this session
  std::uint64_t pending_index_ = 0;
  std::uint64_t unpaid_ = 0;
  std::optional<RoundResult> last_result_;
  bool settle_submitted_ = false;
  ExecutorLog log_;
};

struct RequesterConfig {
  std::string function_id;
  MState initial_state;
  std::uint64_t total_cycles = 1000;
  std::uint64_t cycles_per_round = 10;
  ledger::Coins rate = 1;
  // Per-session deposit when set; otherwise rate x remaining cycles.
  std::optional<ledger::Coins> deposit;
  tee::ResultMode mode = tee::ResultMode::FullState;
  Timing timing;
  RequesterOverlay overlay;
};

enum class KeySource : std::uint8_t { Message, Ledger };

struct PaidResult {
  std::size_t session = 0;
  RoundResult result;
  ledger::ChannelUpdate update;
  MState base;  // state the result was computed from
  tee::AttestationRecord attestation;
};

struct ObtainedKey {
  std::size_t session = 0;
  crypto::Digest key_hash;
  crypto::SymmetricKey key;
  KeySource source = KeySource::Message;
  ActorId executor = net::kNoActor;
};

struct ChannelSession {
  ActorId executor = net::kNoActor;
  crypto::Address executor_addr;
  tee::AttestationRecord attestation;
  std::optional<ledger::ContractId> contract;
  ledger::Coins deposit = 0;
  Tick timeout = 0;
  ledger::Coins b = 0;
  std::uint64_t cycles_budget = 0;
  bool resolved = false;  // closed or refunded, as observed on the ledger
};

struct RequesterLog {
  std::vector<ChannelSession> sessions;
  std::vector<PaidResult> paid;  // every update the requester signed, with its result
  std::vector<ObtainedKey> keys;
  std::vector<std::string> rejections;
  std::uint64_t rounds_completed = 0;
  std::uint64_t cycles_completed = 0;
  std::optional<Tick> started;
  std::optional<Tick> finished;
  Tick last_progress = 0;
  bool completed = false;
};

class Requester final : public Actor {
 public:
  Requester(World& world, std::string name, crypto::SigningIdentity identity, RequesterConfig cfg,
            std::shared_ptr<const Program> program, std::vector<ActorId> executors);

  void start();
  void on_receipt(const ledger::Receipt& r) override;

  const RequesterLog& log() const { return log_; }
  const MState& current_state() const { return state_; }
  const OutBuffer& outputs() const { return outputs_; }
  const RequesterConfig& config() const { return cfg_; }

 private:
  enum class Phase : std::uint8_t {
    AwaitAccept,
    AwaitChannel,
    AwaitResult,
    AwaitKey,
    AwaitLedgerKey,
    Finished,
  };

  struct PendingRound {
    RoundResult result;
    ledger::ChannelUpdate update;
    std::size_t paid_index = 0;
  };

  void on_message(const Message& m, ActorId from) override;
  void on_patience() override;
  void on_accept(const Accept& a, ActorId from);
  void on_result(const RoundResult& r, const Message& m);
  void on_key(const crypto::SymmetricKey& k, KeySource source);
  void open_session();
  void request_round();
  void abandon(const std::string& why);
  void poll_ledger_key();
  void watch_timeout(std::size_t session);
  void finish();
  ChannelSession& session() { return log_.sessions.back(); }
  std::uint64_t remaining() const { return cfg_.total_cycles - log_.cycles_completed; }
  bool behaves_now(RequesterBehavior b) const {
    return cfg_.overlay.behavior == b && session_round_ == cfg_.overlay.round && log_.sessions.size() == 1;
  }
  bool behaves(RequesterBehavior b) const { return cfg_.overlay.behavior == b; }

  RequesterConfig cfg_;
  std::shared_ptr<const Program> program_;
  crypto::Digest expected_measurement_;
  std::vector<ActorId> executors_;
  std::size_t next_executor_ = 0;
  Phase phase_ = Phase::AwaitAccept;
  MState state_;
  OutBuffer outputs_;
  std::uint64_t requested_cycles_ = 0;
  std::uint64_t session_round_ = 0;  // rounds requested in the current session
  std::optional<PendingRound> pending_;
  std::vector<crypto::Digest> seen_key_hashes_;
  std::optional<ledger::ChannelUpdate> previous_update_;
  RequesterLog log_;
};

// Owns the clock, the network and the ledger, and routes receipts to actors.
class World {
 public:
  World(net::LinkModel link, net::FaultScript faults, ledger::FeeSchedule fees, Tick liveness_bound,
        Tick confirm_delay);

  net::Simulator& sim() { return sim_; }
  net::Network& net() { return net_; }
  ledger::Ledger& ledger() { return ledger_; }
  const ledger::Ledger& ledger() const { return ledger_; }
  Tick now() const { return sim_.now(); }

  ActorId attach(Actor& actor);
  void submit(Actor& actor, ledger::Transaction tx);

 private:
  void process_ledger();

  net::Simulator sim_;
  net::Network net_;
  ledger::Ledger ledger_;
  std::vector<Actor*> actors_;
};

}  // namespace fairexec::protocol
