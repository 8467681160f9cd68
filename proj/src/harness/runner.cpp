#include "fairexec/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "fairexec/error.hpp"

namespace fairexec::harness {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

bool ExperimentResult::any_violation() const {
  return std::any_of(rows.begin(), rows.end(), [](const RunRow& r) { return !r.violations.empty(); });
}
bool ExperimentResult::any_livelock() const {
  return std::any_of(rows.begin(), rows.end(), [](const RunRow& r) { return r.livelock; });
}
bool ExperimentResult::any_error() const {
  return std::any_of(rows.begin(), rows.end(), [](const RunRow& r) { return !r.error.empty(); });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  ExperimentResult result;
  result.config_hash = config_hash(cfg);
  auto points = cfg.points();
  result.rows.resize(points.size());
  parallel_for(
      points.size(),
      [&](std::size_t i) {
        auto& row = result.rows[i];
        row.sweep_value = points[i].first;
        row.seed = points[i].second;
        try {
          auto r = protocol::run_scenario(cfg.at(row.sweep_value, row.seed));
          row.metrics = r.metrics;
          row.violations = r.properties.violations;
          if (cfg.write_traces) row.trace = r.trace;
        } catch (const Error& e) {
          row.livelock = e.code() == ErrorCode::TickLimitExceeded;
          if (!row.livelock) row.error = e.what();
          row.metrics.outcome = row.livelock ? "livelock" : "aborted";
        } catch (const std::exception& e) {
          row.error = e.what();
          row.metrics.outcome = "aborted";
        }
      },
      threads);
  return result;
}

const std::vector<std::string> kCsvColumns{
    "config_hash",  "sweep_value",   "seed",        "rounds",
    "bytes_r_to_e", "bytes_e_to_r",  "latency_ticks", "enclave_calls",
    "enclave_time_ticks", "fees_r",  "fees_e",      "outcome",
};

std::string format_csv(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::ostringstream os;
  os << "# config_hash: " << result.config_hash << '\n';
  os << "# sweep_field: " << to_string(cfg.sweep_field) << '\n';
  os << "# note: latency, bandwidth and enclave time come from the simulator's link and enclave\n"
        "#   overhead models, whose constants are listed below. They reproduce trends, not\n"
        "#   wall-clock or real SGX timings; fees are gas x gas_price from the fee schedule.\n";
  os << "# effective config:\n";
  std::istringstream y(to_yaml(cfg));
  for (std::string line; std::getline(y, line);) os << "#   " << line << '\n';
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) os << (i ? "," : "") << kCsvColumns[i];
  os << '\n';
  for (const auto& r : result.rows) {
    const auto& m = r.metrics;
    os << result.config_hash << ',' << r.sweep_value << ',' << r.seed << ',' << m.rounds << ',' << m.bytes_r_to_e
       << ',' << m.bytes_e_to_r << ',' << m.latency_ticks << ',' << m.enclave_calls << ',' << m.enclave_time_ticks
       << ',' << m.fees_r << ',' << m.fees_e << ',' << m.outcome << '\n';
  }
  return os.str();
}

std::string write_outputs(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto csv = (fs::path(dir) / (cfg.name + ".csv")).string();
  std::ofstream(csv) << format_csv(cfg, result);
  if (cfg.write_traces) {
    fs::create_directories(fs::path(dir) / "traces");
    for (const auto& r : result.rows) {
      auto p = fs::path(dir) / "traces" /
               (cfg.name + "_" + std::to_string(r.sweep_value) + "_seed" + std::to_string(r.seed) + ".tsv");
      std::ofstream(p) << r.trace;
    }
  }
  return csv;
}

int exit_code(const ExperimentResult& result) {
  if (result.any_violation() || result.any_error()) return 3;
  if (result.any_livelock()) return 4;
  return 0;
}

}  // namespace fairexec::harness
