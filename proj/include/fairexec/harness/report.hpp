#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairexec/harness/config.hpp"

namespace fairexec::harness {

struct CsvRow {
  std::string config_hash;
  std::uint64_t sweep_value = 0;
  std::uint64_t seed = 0;
  std::uint64_t rounds = 0;
  std::uint64_t bytes_r_to_e = 0;
  std::uint64_t bytes_e_to_r = 0;
  std::uint64_t latency_ticks = 0;
  std::uint64_t enclave_calls = 0;
  std::uint64_t enclave_time_ticks = 0;
  std::uint64_t fees_r = 0;
  std::uint64_t fees_e = 0;
  std::string outcome;
};

struct ParsedCsv {
  SweepField sweep_field = SweepField::None;
  std::optional<ExperimentConfig> config;  // rebuilt from the header, when present
  std::vector<CsvRow> rows;
};

// Throws ConfigError on a malformed file.
ParsedCsv parse_csv(const std::string& text);

struct Report {
  // Mean over seeds at sweep values 10 and 200 (cycles-per-round sweeps only).
  std::optional<double> latency_ratio_10_200;
  // Mean enclave time of 100-call runs over 2-call runs.
  std::optional<double> enclave_ratio_100_2;
  std::string fee_table;
  std::string text;
};

Report make_report(const ParsedCsv& csv);

}  // namespace fairexec::harness
