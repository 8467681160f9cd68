#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fairexec/harness/config.hpp"

namespace fairexec::harness {

// Runs fn(0..n-1) on up to `threads` workers (0 picks the hardware count).
// Results must be written to per-index slots; completion order is not defined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

struct RunRow {
  std::uint64_t sweep_value = 0;
  std::uint64_t seed = 0;
  protocol::RunMetrics metrics;
  std::vector<std::string> violations;
  bool livelock = false;
  std::string error;  // unexpected exception text, if any
  std::string trace;  // empty unless traces were requested
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<RunRow> rows;  // in ExperimentConfig::points() order

  bool any_violation() const;
  bool any_livelock() const;
  bool any_error() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 0);

extern const std::vector<std::string> kCsvColumns;

// Header comment lines with the effective config and the calibration note,
// then the column row, then one row per run.
std::string format_csv(const ExperimentConfig& cfg, const ExperimentResult& result);

// Writes <dir>/<name>.csv and, when enabled, one trace file per run under
// <dir>/traces. Returns the CSV path.
std::string write_outputs(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& result);

// 0 all settled, 3 property violation or unexpected abort, 4 livelock.
int exit_code(const ExperimentResult& result);

}  // namespace fairexec::harness
