#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairexec/protocol.hpp"

namespace fairexec::protocol {

enum class Party : std::uint8_t { Requester, Executor };

// A network-level fault aimed at one party's outgoing messages. For Tamper,
// a field of the decoded message is changed (see tamper_message).
struct NetFault {
  Party party = Party::Requester;
  Variant variant = Variant::Update;
  std::uint64_t index = 0;
  net::FaultAction action = net::FaultAction::Drop;
  Tick delay = 0;
};

// Re-encodes `bytes` with one field of the message altered.
Bytes tamper_message(const Bytes& bytes);

struct ScenarioConfig {
  std::string workload = "life";
  workloads::WorkloadParams params;
  std::uint64_t total_cycles = 1000;
  std::uint64_t cycles_per_round = 10;
  ledger::Coins rate = 1;
  std::optional<ledger::Coins> deposit;
  tee::ResultMode mode = tee::ResultMode::FullState;
  net::LinkModel link;
  tee::OverheadModel overhead;
  std::uint64_t memory_limit = tee::kDefaultMemoryLimit;
  ledger::FeeSchedule fees;
  Tick liveness_bound = 1'000'000;
  Tick confirm_delay = 500'000;
  Timing timing;
  std::uint64_t seed = 1;
  std::size_t executors = 1;
  RequesterOverlay requester;
  ExecutorOverlay executor;  // applies to the first executor only
  std::vector<NetFault> faults;
  Tick tick_limit = 2'000'000'000;

  bool adversarial() const { return !requester.honest() || !executor.honest() || !faults.empty(); }
};

struct RunMetrics {
  std::uint64_t rounds = 0;
  std::uint64_t bytes_r_to_e = 0;
  std::uint64_t bytes_e_to_r = 0;
  Tick latency_ticks = 0;
  std::uint64_t enclave_calls = 0;
  Tick enclave_time_ticks = 0;
  ledger::Coins fees_r = 0;
  ledger::Coins fees_e = 0;
  std::string outcome;
};

// Trace-level checks. A property is only judged when the party it protects
// followed the protocol.
struct PropertyReport {
  bool requester_safety_checked = false;
  bool executor_safety_checked = false;
  bool bounded_loss_checked = false;
  bool coherence_checked = false;
  // Largest run of executed-but-unpaid rounds over executors that followed
  // the protocol; a deviating executor's voluntary extra work is not counted.
  std::uint64_t max_unpaid_rounds = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

struct ScenarioResult {
  RunMetrics metrics;
  MState initial_state;
  MState final_state;
  OutBuffer outputs;
  bool completed = false;
  std::uint64_t cycles_completed = 0;
  PropertyReport properties;
  RequesterLog requester;
  std::vector<ExecutorLog> executors;
  std::vector<ledger::PaymentChannel> channels;
  std::vector<ledger::Receipt> receipts;
  std::string trace;
  std::string ledger_trace;
  Tick end_tick = 0;
  net::TrafficCounters traffic;
  std::uint64_t in_flight_at_end = 0;
};

// Builds a world from the config, runs it to quiescence and checks the
// trace properties. Throws TickLimitExceeded on livelock.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace fairexec::protocol
