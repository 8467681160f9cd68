#include "fairexec/harness/adversary.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fairexec/error.hpp"
#include "fairexec/harness/config.hpp"
#include "fairexec/harness/runner.hpp"

namespace fairexec::harness {

using protocol::Party;
using protocol::Variant;

std::size_t AdversarySuiteResult::failed() const {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const AdversaryOutcome& o) { return !o.passed; }));
}

protocol::ScenarioConfig adversary_base() {
  protocol::ScenarioConfig c;
  c.workload = "life";
  c.params.size = 10;
  c.total_cycles = 100;
  c.cycles_per_round = 10;
  c.seed = 7;
  return c;
}

std::vector<AdversaryCase> adversary_matrix(const protocol::ScenarioConfig& base) {
  std::vector<AdversaryCase> out;
  const std::uint64_t rounds = (base.total_cycles + base.cycles_per_round - 1) / base.cycles_per_round;
  const std::vector<std::uint64_t> targets{0, rounds / 2, rounds - 1};

  out.push_back({"baseline", "none", "honest", 0, base});

  for (auto b : protocol::all_requester_behaviors()) {
    for (auto t : targets) {
      auto c = base;
      c.requester = {b, t};
      std::string name(protocol::to_string(b));
      out.push_back({"R:" + name + "@" + std::to_string(t), "requester", name, t, c});
    }
  }
  for (auto b : protocol::all_executor_behaviors()) {
    for (auto t : targets) {
      auto c = base;
      c.executor = {b, t};
      std::string name(protocol::to_string(b));
      out.push_back({"E:" + name + "@" + std::to_string(t), "executor", name, t, c});
    }
    // With a standby executor the requester should transfer and finish.
    auto c = base;
    c.executors = 2;
    c.executor = {b, targets[1]};
    std::string name(protocol::to_string(b));
    out.push_back({"E2:" + name + "@" + std::to_string(targets[1]), "executor", name + " (2 executors)", targets[1],
                   c});
  }

  struct Stream {
    Party party;
    Variant variant;
    bool per_round;
  };
  const std::vector<Stream> streams{
      {Party::Requester, Variant::Request, false},  {Party::Requester, Variant::Continue, true},
      {Party::Requester, Variant::Update, true},    {Party::Requester, Variant::Terminate, false},
      {Party::Executor, Variant::Accept, false},    {Party::Executor, Variant::RoundResult, true},
      {Party::Executor, Variant::KeyReveal, true},
  };
  const auto patience = base.timing.patience;
  for (const auto& s : streams) {
    for (auto action : {net::FaultAction::Drop, net::FaultAction::Tamper, net::FaultAction::Replay,
                        net::FaultAction::Delay, net::FaultAction::Partition}) {
      std::vector<std::uint64_t> idx = s.per_round ? targets : std::vector<std::uint64_t>{0};
      for (auto i : idx) {
        protocol::NetFault f;
        f.party = s.party;
        f.variant = s.variant;
        f.index = i;
        f.action = action;
        switch (action) {
          case net::FaultAction::Replay: f.delay = patience / 10; break;
          case net::FaultAction::Delay: f.delay = 2 * patience; break;
          case net::FaultAction::Partition: f.delay = 3 * patience; break;
          default: break;
        }
        auto c = base;
        c.faults = {f};
        std::string dev = std::string(to_string(action)) + " " +
                          (s.party == Party::Requester ? "requester " : "executor ") +
                          std::string(protocol::to_string(s.variant));
        out.push_back({"N:" + std::string(to_string(action)) + ":" +
                           (s.party == Party::Requester ? "R:" : "E:") + std::string(protocol::to_string(s.variant)) +
                           "#" + std::to_string(i),
                       "network", dev, i, c});
      }
    }
  }
  return out;
}

AdversarySuiteResult run_adversary_suite(const std::vector<AdversaryCase>& cases, unsigned threads,
                                         const std::string& trace_dir) {
  namespace fs = std::filesystem;
  AdversarySuiteResult res;
  res.outcomes.resize(cases.size());
  auto t0 = std::chrono::steady_clock::now();
  if (!trace_dir.empty()) fs::create_directories(trace_dir);

  parallel_for(
      cases.size(),
      [&](std::size_t i) {
        auto& o = res.outcomes[i];
        o.c = cases[i];
        std::string trace;
        try {
          auto r = protocol::run_scenario(o.c.config);
          trace = r.trace;
          o.outcome = r.metrics.outcome;
          o.max_unpaid = r.properties.max_unpaid_rounds;
          o.requester_safety = r.properties.requester_safety_checked;
          o.executor_safety = r.properties.executor_safety_checked;
          o.bounded_loss = r.properties.bounded_loss_checked;
          o.failures = r.properties.violations;
          if (o.max_unpaid > 1) o.failures.push_back("more than one unpaid round");
          if (o.c.config.requester.honest()) {
            for (const auto& ch : r.channels) {
              if (ch.status == ledger::ChannelStatus::Open) o.failures.push_back("honest requester's deposit left locked");
            }
          }
        } catch (const Error& e) {
          o.outcome = e.code() == ErrorCode::TickLimitExceeded ? "livelock" : "aborted";
          o.failures.push_back(e.what());
        }
        o.passed = o.failures.empty();
        if (!o.passed && !trace_dir.empty()) {
          std::string file = o.c.id;
          for (auto& ch : file) {
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
          }
          auto p = fs::path(trace_dir) / (file + ".tsv");
          std::ofstream(p) << trace;
          o.trace_path = p.string();
        }
      },
      threads);

  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string format_matrix(const AdversarySuiteResult& r) {
  std::ostringstream os;
  os << "id\tparty\tdeviation\ttarget\texecutors\toutcome\tmax_unpaid\trequester_safety\texecutor_safety\tbounded_loss\tverdict\tdetail\n";
  for (const auto& o : r.outcomes) {
    auto col = [&](bool judged, const std::string& tag) {
      if (!judged) return "n/a";
      bool hit = std::any_of(o.failures.begin(), o.failures.end(),
                             [&](const std::string& f) { return f.rfind(tag, 0) == 0; });
      return hit ? "violated" : "held";
    };
    os << o.c.id << '\t' << o.c.party << '\t' << o.c.deviation << '\t' << o.c.target << '\t' << o.c.config.executors
       << '\t' << o.outcome << '\t' << o.max_unpaid << '\t' << col(o.requester_safety, "requester_safety") << '\t' << col(o.executor_safety, "executor_safety")
       << '\t' << col(o.bounded_loss, "bounded_loss") << '\t'
       << (o.passed ? "PASS" : "FAIL") << '\t';
    for (std::size_t i = 0; i < o.failures.size(); ++i) os << (i ? "; " : "") << o.failures[i];
    if (!o.trace_path.empty()) os << " (trace " << o.trace_path << ")";
    os << '\n';
  }
  os << "# " << r.outcomes.size() - r.failed() << "/" << r.outcomes.size() << " passed\n";
  return os.str();
}

}  // namespace fairexec::harness
