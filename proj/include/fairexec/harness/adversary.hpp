#pragma once

#include <string>
#include <vector>

#include "fairexec/scenario.hpp"

namespace fairexec::harness {

struct AdversaryCase {
  std::string id;
  std::string party;  // requester, executor, network or none
  std::string deviation;
  std::uint64_t target = 0;  // round or message index
  protocol::ScenarioConfig config;
};

struct AdversaryOutcome {
  AdversaryCase c;
  bool passed = false;
  std::string outcome;
  std::uint64_t max_unpaid = 0;
  bool requester_safety = false, executor_safety = false, bounded_loss = false;  // whether each property was judged
  std::vector<std::string> failures;
  std::string trace_path;  // set for failed cases when traces are written
};

struct AdversarySuiteResult {
  std::vector<AdversaryOutcome> outcomes;
  double seconds = 0;

  std::size_t failed() const;
};

// Small Life run used as the base for every case: 10x10 grid, 100 cycles in
// rounds of 10.
protocol::ScenarioConfig adversary_base();

// Every scripted requester and executor deviation at the first, a middle and
// the last round; every network fault on every message type each party sends;
// and one baseline.
std::vector<AdversaryCase> adversary_matrix(const protocol::ScenarioConfig& base = adversary_base());

// A case passes when the protection properties hold, the unpaid-round bound
// is at most one, no run livelocks, and an honest requester never ends with
// its deposit locked in an open channel.
AdversarySuiteResult run_adversary_suite(const std::vector<AdversaryCase>& cases, unsigned threads = 0,
                                         const std::string& trace_dir = "");

// Tab separated, one line per case.
std::string format_matrix(const AdversarySuiteResult& r);

}  // namespace fairexec::harness
