#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fairexec/error.hpp"
#include "fairexec/harness/adversary.hpp"
#include "fairexec/harness/config.hpp"
#include "fairexec/harness/report.hpp"
#include "fairexec/harness/runner.hpp"

using namespace fairexec;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kViolation = 3;
constexpr int kLivelock = 4;

std::uint64_t default_seed() {
  const char* env = std::getenv("FAIREXEC_SEED");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    auto v = std::stoull(env, &used);
    if (used == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ConfigError, std::string("FAIREXEC_SEED is not an unsigned integer: '") + env + "'");
}

int cmd_run(const std::string& config_path, const std::string& out_dir, unsigned threads, bool traces) {
  harness::ExperimentConfig cfg;
  try {
    cfg = harness::load_config(config_path, default_seed());
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (traces) cfg.write_traces = true;
  auto result = harness::run_experiment(cfg, threads);
  auto csv = harness::write_outputs(out_dir, cfg, result);
  std::cout << "wrote " << csv << " (" << result.rows.size() << " runs, config " << result.config_hash << ")\n";
  for (const auto& r : result.rows) {
    for (const auto& v : r.violations) {
      std::cerr << "violation at " << r.sweep_value << "/seed " << r.seed << ": " << v << '\n';
    }
    if (!r.error.empty()) std::cerr << "aborted at " << r.sweep_value << "/seed " << r.seed << ": " << r.error << '\n';
    if (r.livelock) std::cerr << "livelock at " << r.sweep_value << "/seed " << r.seed << '\n';
  }
  return harness::exit_code(result);
}

int cmd_suite(const std::string& out_dir, unsigned threads) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto cases = harness::adversary_matrix();
  auto res = harness::run_adversary_suite(cases, threads, (fs::path(out_dir) / "traces").string());
  auto path = (fs::path(out_dir) / "adversary_matrix.tsv").string();
  std::ofstream(path) << harness::format_matrix(res);
  std::cout << "adversary suite: " << res.outcomes.size() - res.failed() << "/" << res.outcomes.size()
            << " passed in " << res.seconds << " s; matrix at " << path << '\n';
  bool livelock = false;
  bool violation = false;
  for (const auto& o : res.outcomes) {
    if (o.passed) continue;
    (o.outcome == "livelock" ? livelock : violation) = true;
    std::cerr << "FAIL " << o.c.id;
    for (const auto& f : o.failures) std::cerr << " | " << f;
    if (!o.trace_path.empty()) std::cerr << " | trace " << o.trace_path;
    std::cerr << '\n';
  }
  if (violation) return kViolation;
  if (livelock) return kLivelock;
  return kOk;
}

int cmd_report(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) {
    std::cerr << "cannot open " << csv_path << '\n';
    return kConfigError;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    auto report = harness::make_report(harness::parse_csv(ss.str()));
    std::cout << report.text;
  } catch (const Error& e) {
    std::cerr << csv_path << ": " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated fair-exchange runs for outsourced enclave computation"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("-j,--threads", threads, "worker threads (0 = hardware count)");

  std::string config_path, out_dir = "out", csv_path;
  bool traces = false;
  auto* run = app.add_subcommand("run", "run a config's sweep and write a metrics CSV");
  run->add_option("--config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--traces", traces, "also write one message trace per run");

  auto* suite = app.add_subcommand("adversary-suite", "run the scripted adversary matrix");
  suite->add_option("--out", out_dir, "output directory");

  auto* report = app.add_subcommand("report", "derive ratios and the cost table from a metrics CSV");
  report->add_option("--csv", csv_path, "metrics CSV written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, threads, traces);
    if (*suite) return cmd_suite(out_dir, threads);
    if (*report) return cmd_report(csv_path);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    if (e.code() == ErrorCode::ConfigError) return kConfigError;
    if (e.code() == ErrorCode::TickLimitExceeded) return kLivelock;
    return kViolation;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kViolation;
  }
  return kOk;
}
