#pragma once

#include <string>
#include <vector>

#include "fairexec/scenario.hpp"

namespace fairexec::harness {

enum class SweepField : std::uint8_t { None, CyclesPerRound, Size, TotalCycles, Rate };

std::string_view to_string(SweepField f);

// A base scenario plus the points and seeds to run it at.
struct ExperimentConfig {
  std::string name = "experiment";
  protocol::ScenarioConfig base;
  SweepField sweep_field = SweepField::None;
  std::vector<std::uint64_t> sweep_values;
  std::vector<std::uint64_t> seeds{1};
  bool write_traces = false;

  // Every (sweep value, seed) pair, sweep-major.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> points() const;
  protocol::ScenarioConfig at(std::uint64_t sweep_value, std::uint64_t seed) const;
};

// Parses YAML text. Errors are ConfigError with "line L, field F: ..." text.
// `default_seed` applies when the file gives no seeds.
ExperimentConfig parse_config(const std::string& text, std::uint64_t default_seed = 1);
ExperimentConfig load_config(const std::string& path, std::uint64_t default_seed = 1);

// Canonical YAML for the fully defaulted config; stable across runs.
std::string to_yaml(const ExperimentConfig& cfg);
// First 16 hex digits of SHA-256(to_yaml(cfg)).
std::string config_hash(const ExperimentConfig& cfg);

// Name lookups shared by the config parser and the adversary suite.
protocol::RequesterBehavior requester_behavior_from(const std::string& s);
protocol::ExecutorBehavior executor_behavior_from(const std::string& s);
protocol::Variant variant_from(const std::string& s);
net::FaultAction fault_action_from(const std::string& s);
std::string_view to_string(net::FaultAction a);

}  // namespace fairexec::harness
