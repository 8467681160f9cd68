#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "fairexec/error.hpp"
#include "fairexec/harness/adversary.hpp"
#include "fairexec/harness/config.hpp"
#include "fairexec/harness/report.hpp"
#include "fairexec/harness/runner.hpp"

using namespace fairexec;
using namespace fairexec::harness;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixture(const std::string& name) { return std::string(FAIREXEC_FIXTURE_DIR) + "/" + name; }

std::string config_error(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << yaml;
  return "";
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(Config, ReferenceFileSpellsOutTheDefaults) {
  auto cfg = load_config(std::string(FAIREXEC_CONFIG_DIR) + "/full_reference.yaml");
  ExperimentConfig defaults;
  defaults.name = "full_reference";
  EXPECT_EQ(to_yaml(cfg), to_yaml(defaults));
  EXPECT_EQ(config_hash(cfg), config_hash(defaults));
}

TEST(Config, ParsesEveryField) {
  auto cfg = parse_config(R"(
name: x
workload: {name: ocr, size: 30, noise: 0.1}
total_cycles: 300
cycles_per_round: 7
rate: 3
deposit: 5000
mode: diff
executors: 2
timing: {patience: 11, timeout_span: 12, settle_margin: 13}
link: {latency: 21, bytes_per_tick: 22, overhead_bytes: 23}
enclave: {enter_exit_ticks: 31, per_cycle_ticks: 32, memory_limit: 33}
fees: {init_gas: 41, gas_price: 42, usd_per_ether: 100}
ledger: {liveness_bound: 51, confirm_delay: 52}
seeds: [5, 6]
sweep: {field: rate, values: [1, 2]}
requester: {behavior: underpay, round: 2}
executor: {behavior: withhold-key-settle, round: 4}
faults:
  - {party: executor, message: KeyReveal, index: 3, action: replay, delay: 99}
)");
  const auto& b = cfg.base;
  EXPECT_EQ(b.workload, "ocr");
  EXPECT_EQ(b.params.size, 30u);
  EXPECT_DOUBLE_EQ(b.params.noise, 0.1);
  EXPECT_EQ(b.total_cycles, 300u);
  EXPECT_EQ(b.cycles_per_round, 7u);
  EXPECT_EQ(b.rate, 3u);
  EXPECT_EQ(b.deposit, 5000u);
  EXPECT_EQ(b.mode, tee::ResultMode::Diff);
  EXPECT_EQ(b.executors, 2u);
  EXPECT_EQ(b.timing.patience, 11u);
  EXPECT_EQ(b.timing.settle_margin, 13u);
  EXPECT_EQ(b.link.overhead_bytes, 23u);
  EXPECT_EQ(b.overhead.per_cycle_ticks, 32u);
  EXPECT_EQ(b.memory_limit, 33u);
  EXPECT_EQ(b.fees.init_gas, 41u);
  EXPECT_EQ(b.fees.close_gas, 114'757u);
  EXPECT_DOUBLE_EQ(b.fees.usd_per_coin, 100e-18);
  EXPECT_EQ(b.confirm_delay, 52u);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{5, 6}));
  EXPECT_EQ(cfg.sweep_field, SweepField::Rate);
  EXPECT_EQ(b.requester.behavior, protocol::RequesterBehavior::Underpay);
  EXPECT_EQ(b.executor.round, 4u);
  ASSERT_EQ(b.faults.size(), 1u);
  EXPECT_EQ(b.faults[0].variant, protocol::Variant::KeyReveal);
  EXPECT_EQ(b.faults[0].action, net::FaultAction::Replay);
  EXPECT_EQ(b.faults[0].delay, 99u);

  auto again = parse_config(to_yaml(cfg));
  EXPECT_EQ(to_yaml(again), to_yaml(cfg));
}

TEST(Config, DiagnosticsNameLineAndField) {
  EXPECT_TRUE(contains(config_error("name: a\nworkload:\n  sise: 3\n"), "line 3, field 'workload.sise': unknown field"));
  EXPECT_TRUE(contains(config_error("total_cycles: lots\n"), "line 1, field 'total_cycles': expected a non-negative"));
  EXPECT_TRUE(contains(config_error("\nrate: -4\n"), "line 2, field 'rate'"));
  EXPECT_TRUE(contains(config_error("seeds: [1, x]\n"), "field 'seeds'"));
  EXPECT_TRUE(contains(config_error("workload: {name: chess}\n"), "field 'workload.name'"));
  EXPECT_TRUE(contains(config_error("mode: sparse\n"), "field 'mode'"));
  EXPECT_TRUE(contains(config_error("requester: {behavior: sneaky}\n"), "field 'requester.behavior'"));
  EXPECT_TRUE(contains(config_error("sweep: {field: cycles_per_round}\n"), "sweep.values"));
  EXPECT_TRUE(contains(config_error("cycles_per_round: 0\n"), "must be positive"));
  EXPECT_TRUE(contains(config_error("a: [1,\n"), "line "));
  EXPECT_TRUE(contains(config_error("faults:\n  - {party: both, message: Update, action: drop}\n"),
                       "line 2, field 'faults[0].party'"));
}

TEST(Config, DefaultSeedAppliesOnlyWithoutSeeds) {
  EXPECT_EQ(parse_config("name: a\n", 42).seeds, (std::vector<std::uint64_t>{42}));
  EXPECT_EQ(parse_config("seeds: [3]\n", 42).seeds, (std::vector<std::uint64_t>{3}));
}

TEST(Config, PointsAreSweepMajor) {
  auto cfg = parse_config("seeds: [1, 2]\nsweep: {field: cycles_per_round, values: [10, 20]}\n");
  using P = std::pair<std::uint64_t, std::uint64_t>;
  EXPECT_EQ(cfg.points(), (std::vector<P>{{10, 1}, {10, 2}, {20, 1}, {20, 2}}));
  EXPECT_EQ(cfg.at(20, 2).cycles_per_round, 20u);
  EXPECT_EQ(cfg.at(20, 2).seed, 2u);
  auto sizes = parse_config("sweep: {field: size, values: [10]}\n");
  EXPECT_EQ(sizes.at(10, 1).params.size, 10u);
}

TEST(Csv, ColumnsAreStable) {
  EXPECT_EQ(kCsvColumns, (std::vector<std::string>{"config_hash", "sweep_value", "seed", "rounds", "bytes_r_to_e",
                                                   "bytes_e_to_r", "latency_ticks", "enclave_calls",
                                                   "enclave_time_ticks", "fees_r", "fees_e", "outcome"}));
}

TEST(Csv, MatchesGoldenFile) {
  auto cfg = load_config(fixture("tiny.yaml"));
  auto csv = format_csv(cfg, run_experiment(cfg, 1));
  EXPECT_EQ(csv, slurp(fixture("tiny_golden.csv")));
}

TEST(Csv, RowOrderIgnoresThreadCountAndRepeats) {
  auto cfg = load_config(fixture("tiny.yaml"));
  auto a = format_csv(cfg, run_experiment(cfg, 1));
  auto b = format_csv(cfg, run_experiment(cfg, 4));
  auto c = format_csv(cfg, run_experiment(cfg, 3));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Csv, RowValuesFollowFromTheModel) {
  auto cfg = load_config(fixture("tiny.yaml"));
  auto res = run_experiment(cfg, 2);
  ASSERT_EQ(res.rows.size(), 6u);
  const ledger::Coins gas_price = 2'000'000'000;
  for (const auto& r : res.rows) {
    const std::uint64_t rounds = (20 + r.sweep_value - 1) / r.sweep_value;
    EXPECT_EQ(r.metrics.rounds, rounds);
    EXPECT_EQ(r.metrics.enclave_calls, rounds);
    EXPECT_EQ(r.metrics.enclave_time_ticks, rounds * 4000 + 20 * 90);
    EXPECT_EQ(r.metrics.fees_r, 81'053 * gas_price);
    EXPECT_EQ(r.metrics.fees_e, 114'757 * gas_price);
    EXPECT_EQ(r.metrics.outcome, "completed");
  }
  // One round: Continue (61-byte header + u64), result, Update (header + id +
  // u64 + key hash + length-prefixed 96-byte signature), KeyReveal (header +
  // u64 + 32-byte key). Each leg costs 3000 + ceil(size / 10).
  const auto& one = res.rows[4];
  ASSERT_EQ(one.sweep_value, 20u);
  const std::uint64_t header = 1 + 20 + 8 + 32;
  const std::uint64_t cont = header + 8, reveal = header + 8 + 32;
  const std::uint64_t accept = header + 20 + 32 + 20;
  const std::uint64_t result = one.metrics.bytes_e_to_r - accept - reveal;
  const std::uint64_t update = header + 32 + 8 + 32 + 4 + 96;
  auto leg = [](std::uint64_t size) { return 3000 + (size + 9) / 10; };
  EXPECT_EQ(one.metrics.latency_ticks, leg(cont) + 5800 + leg(result) + leg(update) + leg(reveal));
}

TEST(Csv, ParsesBackWithItsConfig) {
  auto cfg = load_config(fixture("tiny.yaml"));
  auto parsed = parse_csv(slurp(fixture("tiny_golden.csv")));
  EXPECT_EQ(parsed.sweep_field, SweepField::CyclesPerRound);
  ASSERT_TRUE(parsed.config);
  EXPECT_EQ(config_hash(*parsed.config), config_hash(cfg));
  ASSERT_EQ(parsed.rows.size(), 6u);
  EXPECT_EQ(parsed.rows[0].config_hash, config_hash(cfg));
  EXPECT_EQ(parsed.rows[2].sweep_value, 10u);
  EXPECT_EQ(parsed.rows[2].rounds, 2u);
}

TEST(Csv, MalformedInputIsRejected) {
  EXPECT_THROW(parse_csv("a,b,c\n1,2,3\n"), Error);
  EXPECT_THROW(parse_csv("# only comments\n"), Error);
  std::string header;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) header += (i ? "," : "") + kCsvColumns[i];
  EXPECT_THROW(parse_csv(header + "\nh,1,1,x,0,0,0,0,0,0,0,completed\n"), Error);
  EXPECT_THROW(parse_csv(header + "\nh,1,1\n"), Error);
}

TEST(Report, RatiosAndCostTable) {
  std::string csv = "# sweep_field: cycles_per_round\n";
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) csv += (i ? "," : "") + kCsvColumns[i];
  csv += "\n";
  // latency mean at 10 is 2000, at 200 is 200; 100 calls take 500, 2 calls 100.
  csv += "h,10,1,100,0,0,1000,100,500,0,0,completed\n";
  csv += "h,10,2,100,0,0,3000,100,500,0,0,completed\n";
  csv += "h,200,1,5,0,0,200,2,100,0,0,completed\n";
  csv += "h,300,1,4,0,0,999999,4,0,0,0,refunded\n";
  auto rep = make_report(parse_csv(csv));
  ASSERT_TRUE(rep.latency_ratio_10_200);
  EXPECT_DOUBLE_EQ(*rep.latency_ratio_10_200, 10.0);
  ASSERT_TRUE(rep.enclave_ratio_100_2);
  EXPECT_DOUBLE_EQ(*rep.enclave_ratio_100_2, 5.0);
  EXPECT_TRUE(contains(rep.fee_table, "(contract creation)\t358600\t$0.46\n"));
  EXPECT_TRUE(contains(rep.fee_table, "initChannel\t81053\t$0.10\n"));
  EXPECT_TRUE(contains(rep.fee_table, "closeChannel\t114757\t$0.15\n"));
  EXPECT_TRUE(contains(rep.fee_table, "channelTimeout\t21732\t$0.03\n"));
  EXPECT_TRUE(contains(rep.fee_table, "\t$0.25\n"));
  EXPECT_TRUE(contains(rep.text, "latency ratio cpr=10 / cpr=200: 10.00"));
  EXPECT_TRUE(contains(rep.text, "1 runs without outcome 'completed' excluded"));
  EXPECT_TRUE(contains(rep.text, "Model-calibrated"));
}

TEST(Report, NoRatiosWithoutTheirPoints) {
  auto rep = make_report(parse_csv(slurp(fixture("tiny_golden.csv"))));
  EXPECT_FALSE(rep.latency_ratio_10_200);
  EXPECT_FALSE(rep.enclave_ratio_100_2);
}

TEST(Runner, ExitCodes) {
  ExperimentResult ok;
  ok.rows.resize(2);
  EXPECT_EQ(exit_code(ok), 0);
  auto livelock = ok;
  livelock.rows[1].livelock = true;
  EXPECT_EQ(exit_code(livelock), 4);
  auto bad = livelock;
  bad.rows[0].violations.push_back("x");
  EXPECT_EQ(exit_code(bad), 3);
  auto aborted = ok;
  aborted.rows[0].error = "boom";
  EXPECT_EQ(exit_code(aborted), 3);
}

TEST(Runner, LivelockIsReportedNotThrown) {
  auto cfg = parse_config("workload: {size: 10}\ntotal_cycles: 20\ntick_limit: 100\n");
  auto res = run_experiment(cfg, 1);
  ASSERT_EQ(res.rows.size(), 1u);
  EXPECT_TRUE(res.rows[0].livelock);
  EXPECT_EQ(res.rows[0].metrics.outcome, "livelock");
  EXPECT_EQ(exit_code(res), 4);
}

TEST(Runner, ParallelForVisitsEachIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 8);
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Adversary, MatrixCoversBothPartiesAtEveryStep) {
  auto cases = adversary_matrix();
  std::set<std::string> ids;
  std::set<std::string> req, exe, net_streams;
  std::set<std::uint64_t> req_rounds;
  for (const auto& c : cases) {
    EXPECT_TRUE(ids.insert(c.id).second) << c.id;
    if (c.party == "requester") {
      req.insert(c.deviation);
      req_rounds.insert(c.target);
    }
    if (c.party == "executor") exe.insert(c.deviation);
    if (c.party == "network") net_streams.insert(c.deviation);
  }
  EXPECT_GE(req.size(), 20u);
  EXPECT_GE(exe.size(), 20u);
  EXPECT_EQ(req_rounds, (std::set<std::uint64_t>{0, 5, 9}));
  // 7 message streams (4 requester, 3 executor) x 5 fault actions.
  EXPECT_EQ(net_streams.size(), 35u);
  EXPECT_EQ(ids.count("baseline"), 1u);
}

TEST(Adversary, SampledCasesPassAndFormat) {
  auto all = adversary_matrix();
  std::vector<AdversaryCase> some;
  for (std::size_t i = 0; i < all.size(); i += 7) some.push_back(all[i]);
  auto res = run_adversary_suite(some, 2);
  EXPECT_EQ(res.failed(), 0u);
  auto text = format_matrix(res);
  EXPECT_EQ(text.rfind("id\tparty\tdeviation\ttarget\texecutors\toutcome\tmax_unpaid\trequester_safety\texecutor_safety\tbounded_loss\tverdict", 0),
            0u);
  EXPECT_TRUE(contains(text, "# " + std::to_string(some.size()) + "/" + std::to_string(some.size()) + " passed"));
}

TEST(Adversary, FailuresCarryATracePath) {
  AdversaryCase c{"livelocked", "none", "honest", 0, adversary_base()};
  c.config.tick_limit = 10;
  auto dir = ::testing::TempDir() + "fairexec_traces";
  auto res = run_adversary_suite({c}, 1, dir);
  ASSERT_EQ(res.failed(), 1u);
  EXPECT_EQ(res.outcomes[0].outcome, "livelock");
  EXPECT_FALSE(res.outcomes[0].trace_path.empty());
  EXPECT_TRUE(contains(format_matrix(res), "FAIL"));
}
