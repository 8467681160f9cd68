// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "../oracles.hpp"
#include "fairexec/error.hpp"
#include "fairexec/harness/adversary.hpp"
#include "fairexec/harness/config.hpp"
#include "fairexec/harness/report.hpp"
#include "fairexec/harness/runner.hpp"
#include "fairexec/workloads/catalog.hpp"
#include "fairexec/workloads/life.hpp"

using namespace fairexec;
using harness::ExperimentConfig;
using harness::SweepField;

namespace {

const std::vector<std::uint64_t> kSweep{10, 25, 50, 100, 200, 300, 500, 990};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

ExperimentConfig sweep_config(const std::string& workload, std::uint32_t size, tee::ResultMode mode) {
  ExperimentConfig cfg;
  cfg.name = workload + std::to_string(size);
  cfg.base.workload = workload;
  cfg.base.params.size = size;
  cfg.base.total_cycles = 1000;
  cfg.base.mode = mode;
  cfg.sweep_field = SweepField::CyclesPerRound;
  cfg.sweep_values = kSweep;
  cfg.seeds = {1, 2, 3};
  return cfg;
}

// rows[seed][cpr]
std::map<std::uint64_t, std::map<std::uint64_t, harness::RunRow>> by_seed(const harness::ExperimentResult& r) {
  std::map<std::uint64_t, std::map<std::uint64_t, harness::RunRow>> out;
  for (const auto& row : r.rows) out[row.seed][row.sweep_value] = row;
  return out;
}

void criterion1(Outcome& o) {
  auto cases = harness::adversary_matrix();
  std::set<std::string> req, exe;
  for (const auto& c : cases) {
    if (c.party == "requester") req.insert(c.deviation);
    if (c.party == "executor" && c.config.executors == 1) exe.insert(c.deviation);
  }
  auto res = harness::run_adversary_suite(cases);
  std::uint64_t worst = 0;
  std::size_t judged1 = 0, judged2 = 0, judged3 = 0;
  for (const auto& x : res.outcomes) {
    worst = std::max(worst, x.max_unpaid);
    judged1 += x.requester_safety;
    judged2 += x.executor_safety;
    judged3 += x.bounded_loss;
    if (!x.passed) {
      std::string why = x.c.id;
      for (const auto& f : x.failures) why += " | " + f;
      o.require(false, why);
    }
  }
  o.require(req.size() >= 20 && exe.size() >= 20, "fewer than 20 behaviours for a party");
  o.require(worst <= 1, "unpaid-round bound exceeded");
  o.require(res.seconds < 60.0, "suite took longer than 60 s");
  o.detail << std::fixed;
  o.detail.precision(2);
  o.detail << res.outcomes.size() - res.failed() << "/" << res.outcomes.size() << " cases ("
           << req.size() << " requester + " << exe.size() << " executor behaviours at rounds 0/mid/last, "
           << "network faults on every message), properties judged (requester safety/executor safety/bounded loss) in " << judged1 << "/" << judged2 << "/"
           << judged3 << ", max unpaid " << worst << ", " << res.seconds << " s";
}

void criterion2(Outcome& o) {
  std::vector<std::uint64_t> splits{10};
  for (std::uint64_t c = 500; c <= 990; ++c) splits.push_back(c);
  ExperimentConfig cfg;
  cfg.base.workload = "life";
  cfg.base.params.size = 50;
  cfg.base.total_cycles = 1000;
  cfg.sweep_field = SweepField::CyclesPerRound;
  cfg.sweep_values = splits;
  auto res = harness::run_experiment(cfg);
  std::size_t checked = 0;
  for (const auto& r : res.rows) {
    std::uint64_t want = r.sweep_value == 10 ? 100 : 2;
    o.require(r.metrics.outcome == "completed", "run at cpr " + std::to_string(r.sweep_value) + " not completed");
    o.require(r.metrics.rounds == want, "cpr " + std::to_string(r.sweep_value) + " gave " +
                                            std::to_string(r.metrics.rounds) + " rounds");
    ++checked;
  }
  o.detail << "cpr 10 -> " << res.rows[0].metrics.rounds << " rounds; cpr 500..990 (" << checked - 1
           << " values) -> 2 rounds each";
}

void criterion3(Outcome& o) {
  auto t0 = std::chrono::steady_clock::now();
  for (std::uint32_t grid : {10u, 25u, 50u}) {
    auto res = harness::run_experiment(sweep_config("life", grid, tee::ResultMode::FullState));
    double ratio_sum = 0;
    std::size_t n = 0;
    for (const auto& [seed, rows] : by_seed(res)) {
      std::string tag = "grid " + std::to_string(grid) + " seed " + std::to_string(seed);
      std::uint64_t prev_lat = UINT64_MAX, prev_bw = UINT64_MAX;
      for (auto cpr : kSweep) {
        const auto& m = rows.at(cpr).metrics;
        o.require(m.outcome == "completed", tag + " cpr " + std::to_string(cpr) + " not completed");
        std::uint64_t bw = m.bytes_r_to_e + m.bytes_e_to_r;
        o.require(m.latency_ticks <= prev_lat, tag + ": latency rises at cpr " + std::to_string(cpr));
        o.require(bw <= prev_bw, tag + ": bandwidth rises at cpr " + std::to_string(cpr));
        prev_lat = m.latency_ticks;
        prev_bw = bw;
      }
      double ratio = static_cast<double>(rows.at(10).metrics.latency_ticks) /
                     static_cast<double>(rows.at(200).metrics.latency_ticks);
      o.require(ratio >= 8.0 && ratio <= 12.0, tag + ": latency ratio " + std::to_string(ratio));
      ratio_sum += ratio;
      ++n;
      auto bw = [&](std::uint64_t cpr) {
        const auto& m = rows.at(cpr).metrics;
        return static_cast<double>(m.bytes_r_to_e + m.bytes_e_to_r);
      };
      // Flat tail: beyond 500 the byte count moves by under 5%, while the
      // head of the sweep falls by far more.
      o.require(bw(500) / bw(990) - 1.0 < 0.05, tag + ": bandwidth not flat for cpr >= 500");
      o.require(bw(10) / bw(500) > 2.0, tag + ": bandwidth does not fall before flattening");
    }
    o.detail << "grid " << grid << " latency(10)/latency(200) = " << std::fixed;
    o.detail.precision(2);
    o.detail << ratio_sum / static_cast<double>(n) << "; ";
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < 300.0, "grid sweep took longer than 5 minutes");
  o.detail << "latency and bandwidth non-increasing, tail flat; " << secs << " s";
}

void criterion4(Outcome& o) {
  auto res = harness::run_experiment(sweep_config("ocr", 1000, tee::ResultMode::Diff));
  double worst = 0, ratio_lo = 1e9, ratio_hi = 0;
  for (const auto& [seed, rows] : by_seed(res)) {
    std::uint64_t lo = UINT64_MAX, hi = 0;
    for (auto cpr : kSweep) {
      const auto& m = rows.at(cpr).metrics;
      o.require(m.outcome == "completed", "ocr run not completed");
      lo = std::min(lo, m.bytes_r_to_e);
      hi = std::max(hi, m.bytes_r_to_e);
    }
    double spread = static_cast<double>(hi - lo) / static_cast<double>(lo);
    worst = std::max(worst, spread);
    o.require(spread < 0.05, "requester->executor bytes vary by " + std::to_string(spread * 100) + "%");
    const auto& m100 = rows.at(10).metrics;
    const auto& m2 = rows.at(500).metrics;
    o.require(m100.enclave_calls == 100 && m2.enclave_calls == 2, "unexpected enclave call counts");
    double ratio = static_cast<double>(m100.enclave_time_ticks) / static_cast<double>(m2.enclave_time_ticks);
    ratio_lo = std::min(ratio_lo, ratio);
    ratio_hi = std::max(ratio_hi, ratio);
    o.require(ratio >= 4.0 && ratio <= 6.0, "enclave time ratio " + std::to_string(ratio));
  }
  o.detail << std::fixed;
  o.detail.precision(2);
  o.detail << "OCR r->e bytes spread " << worst * 100 << "% across cpr; enclave time 100 calls / 2 calls = "
           << ratio_lo;
  if (ratio_hi != ratio_lo) o.detail << ".." << ratio_hi;
}

void criterion5(Outcome& o) {
  const std::string expected =
      "method\tgas\tusd\n"
      "(contract creation)\t358600\t$0.46\n"
      "initChannel\t81053\t$0.10\n"
      "closeChannel\t114757\t$0.15\n"
      "channelTimeout\t21732\t$0.03\n"
      "per-transaction (init+close)\t195810\t$0.25\n";
  ledger::FeeSchedule fees;
  o.require(ledger::format_fee_table(fees) == expected, "fee table differs:\n" + ledger::format_fee_table(fees));

  // The same table must come out of the report for a real run's CSV.
  ExperimentConfig cfg;
  cfg.base.params.size = 10;
  cfg.base.total_cycles = 20;
  auto res = harness::run_experiment(cfg, 1);
  auto rep = harness::make_report(harness::parse_csv(harness::format_csv(cfg, res)));
  o.require(rep.fee_table == expected, "report fee table differs");
  o.require(rep.text.find(expected) != std::string::npos, "report text lacks the cost table");
  const auto& m = res.rows.at(0).metrics;
  o.require(m.fees_r == 81'053ull * 2'000'000'000ull && m.fees_e == 114'757ull * 2'000'000'000ull,
            "per-run fees do not match the schedule");
  o.detail << "358,600 / 81,053 / 114,757 / 21,732 gas; $0.46 / $0.10 / $0.15 / $0.03; $0.25 per transaction";
}

void criterion6(Outcome& o) {
  crypto::Rng pick(20240601);
  struct Triple {
    std::string workload;
    std::uint64_t seed, total, split, kill_round;
    std::uint32_t size;
    protocol::ExecutorBehavior crash;
    tee::ResultMode mode;
  };
  std::vector<Triple> triples;
  for (int i = 0; i < 100; ++i) {
    Triple t;
    t.workload = pick.uniform(2) == 0 ? "life" : "ocr";
    t.seed = pick.next_u64() % 1'000'000;
    t.total = 20 + pick.uniform(181);
    t.split = 1 + pick.uniform(t.total - 1);
    t.size = t.workload == "life" ? static_cast<std::uint32_t>(8 + pick.uniform(43))
                                  : static_cast<std::uint32_t>(t.total);
    std::uint64_t rounds = (t.total + t.split - 1) / t.split;
    t.crash = pick.uniform(2) == 0 ? protocol::ExecutorBehavior::CrashAfterReveal
                                   : protocol::ExecutorBehavior::CrashBeforeReveal;
    // A crash after revealing the final key leaves nothing to transfer.
    if (rounds == 1) t.crash = protocol::ExecutorBehavior::CrashBeforeReveal;
    std::uint64_t span = t.crash == protocol::ExecutorBehavior::CrashAfterReveal ? rounds - 1 : rounds;
    t.kill_round = pick.uniform(span);
    t.mode = pick.uniform(2) == 0 ? tee::ResultMode::Diff : tee::ResultMode::FullState;
    triples.push_back(t);
  }

  std::vector<std::string> errors(triples.size());
  harness::parallel_for(triples.size(), [&](std::size_t i) {
    const auto& t = triples[i];
    std::string tag = t.workload + " seed " + std::to_string(t.seed) + " split " + std::to_string(t.split);
    try {
      protocol::ScenarioConfig c;
      c.workload = t.workload;
      c.params.size = t.size;
      c.total_cycles = t.total;
      c.cycles_per_round = t.split;
      c.seed = t.seed;
      c.mode = t.mode;

      crypto::Rng rng(t.seed);
      auto inst = workloads::workload_register().instantiate(t.workload, c.params, rng);
      auto oracle = step(*inst.program, inst.initial_state, t.total);

      if (!compose_check(*inst.program, inst.initial_state, t.split, t.total - t.split)) {
        errors[i] = tag + ": compose_check failed";
        return;
      }
      auto split_run = protocol::run_scenario(c);
      if (!split_run.completed || split_run.final_state != oracle.new_state || split_run.outputs != oracle.out) {
        errors[i] = tag + ": split run differs from the single run";
        return;
      }
      c.executors = 2;
      c.executor = {t.crash, t.kill_round};
      auto moved = protocol::run_scenario(c);
      if (moved.requester.sessions.size() != 2) {
        errors[i] = tag + ": no transfer happened";
      } else if (!moved.completed || moved.final_state != oracle.new_state || moved.outputs != oracle.out) {
        errors[i] = tag + ": transferred run differs from the single run";
      } else if (!moved.properties.ok()) {
        errors[i] = tag + ": " + moved.properties.violations.front();
      }
    } catch (const std::exception& e) {
      errors[i] = tag + ": " + e.what();
    }
  });
  std::size_t life = 0;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    life += triples[i].workload == "life";
    o.require(errors[i].empty(), errors[i]);
  }
  o.detail << triples.size() << " triples (" << life << " life, " << triples.size() - life
           << " ocr): split and kill-and-transfer runs byte-identical to step()";
}

void criterion7(Outcome& o) {
  auto t0 = std::chrono::steady_clock::now();
  constexpr int kGrids = 50, kGenerations = 1000;
  std::vector<std::string> errors(kGrids);
  harness::parallel_for(kGrids, [&](std::size_t g) {
    crypto::Rng rng(7000 + g);
    workloads::LifeState s;
    s.grid = workloads::random_grid(50, 50, 0.2 + 0.4 * rng.unit(), rng);
    oracle::Board board(50, std::vector<bool>(50));
    for (std::uint32_t y = 0; y < 50; ++y) {
      for (std::uint32_t x = 0; x < 50; ++x) board[y][x] = s.grid.at(x, y) != 0;
    }
    workloads::LifeProgram p;
    MState cur = workloads::encode_life(s);
    for (int gen = 0; gen < kGenerations; ++gen) {
      MState next = step(p, cur, 1).new_state;
      board = oracle::naive_life_step(board);
      auto decoded = workloads::decode_life(next).grid;
      for (std::uint32_t y = 0; y < 50 && errors[g].empty(); ++y) {
        for (std::uint32_t x = 0; x < 50; ++x) {
          if ((decoded.at(x, y) != 0) != board[y][x]) {
            errors[g] = "grid " + std::to_string(g) + " generation " + std::to_string(gen + 1) + " cell (" +
                        std::to_string(x) + "," + std::to_string(y) + ")";
            break;
          }
        }
      }
      if (errors[g].empty() && apply_diff(cur, gen_diff(cur, next)) != next) {
        errors[g] = "diff round trip fails on grid " + std::to_string(g) + " generation " + std::to_string(gen);
      }
      if (!errors[g].empty()) return;
      cur = std::move(next);
    }
  });
  for (const auto& e : errors) o.require(e.empty(), e);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < 120.0, "took longer than 2 minutes");
  o.detail << std::fixed;
  o.detail.precision(2);
  o.detail << kGrids << " grids x " << kGenerations << " generations match the naive engine, diff round trip on "
           << kGrids * kGenerations << " transitions; " << secs << " s";
}

void criterion8(Outcome& o) {
  constexpr int kSequences = 10'000;
  crypto::Rng setup(99);
  auto r = crypto::SigningIdentity::generate(setup);
  auto e = crypto::SigningIdentity::generate(setup);
  auto x = crypto::SigningIdentity::generate(setup);
  std::vector<std::string> errors(kSequences);
  std::vector<std::uint64_t> ops(kSequences, 0);
  std::vector<std::uint64_t> closed(kSequences, 0), destroyed(kSequences, 0);

  harness::parallel_for(kSequences, [&](std::size_t seq) {
    crypto::Rng rng(1'000'003ull * seq + 17);
    const ledger::Tick d = 1 + rng.uniform(20);
    ledger::Ledger l(ledger::FeeSchedule{}, d, rng.uniform(d + 1));
    const ledger::Coins bank = 1'000'000'000'000'000'000ull;
    l.mint(r.address(), bank);
    l.mint(e.address(), bank);
    l.mint(x.address(), bank);

    struct Known {
      ledger::ContractId id;
      crypto::SymmetricKey k;
    };
    std::vector<Known> known;
    std::map<std::uint64_t, crypto::SymmetricKey> close_keys;  // tx id -> key it carries
    std::map<std::uint64_t, bool> close_valid;
    std::map<std::uint64_t, ledger::Tick> timeout_of_channel_tx;
    std::size_t seen_receipts = 0;
    std::string& err = errors[seq];
    auto fail = [&](const std::string& s) {
      if (err.empty()) err = "sequence " + std::to_string(seq) + ": " + s;
    };

    auto check = [&] {
      ledger::Coins sum = l.balance(r.address()) + l.balance(e.address()) + l.balance(x.address()) + l.fee_sink();
      for (const auto& [id, ch] : l.channels()) {
        if (ch.paid_to_executor > ch.deposit) fail("paid more than the deposit");
        switch (ch.status) {
          case ledger::ChannelStatus::Open:
            sum += ch.deposit;
            if (ch.paid_to_executor || ch.refunded_to_requester) fail("open channel already paid out");
            break;
          case ledger::ChannelStatus::Destroyed:
            if (ch.refunded_to_requester != ch.deposit || ch.paid_to_executor != 0) fail("partial timeout refund");
            break;
          case ledger::ChannelStatus::Closed:
            if (!ch.published_key) fail("close without a published key");
            if (ch.paid_to_executor + ch.refunded_to_requester != ch.deposit) fail("close split does not add up");
            break;
        }
      }
      if (sum != l.minted()) fail("coins not conserved");
      const auto& rec = l.receipts();
      for (; seen_receipts < rec.size(); ++seen_receipts) {
        const auto& rc = rec[seen_receipts];
        if (rc.method == ledger::Method::CloseChannel && rc.ok()) {
          if (!close_valid[rc.tx_id]) fail("an invalid close succeeded");
          auto pk = l.published_key(rc.contract);
          if (!pk || *pk != close_keys[rc.tx_id]) fail("successful close did not publish its key");
        }
        if (rc.method == ledger::Method::ChannelTimeout && rc.ok()) {
          if (rc.executed < l.channel(rc.contract).timeout) fail("timeout before the deadline");
        }
        if (!rc.ok() && rc.fee != 0) fail("failed call charged a fee");
        if (rc.executed > rc.submitted + d) fail("liveness bound exceeded");
      }
    };

    const int n_ops = 5 + static_cast<int>(rng.uniform(26));
    for (int i = 0; i < n_ops; ++i) {
      ++ops[seq];
      auto roll = rng.uniform(100);
      if (roll < 20 || known.empty()) {
        ledger::InitChannelTx tx{r.address(), e.address(), l.now() + rng.uniform(60),
                                 rng.uniform(3) == 0 ? 0 : 1 + rng.uniform(5000)};
        if (rng.uniform(2) == 0) {
          try {
            auto id = l.init_channel(r.address(), tx.addr_r, tx.addr_e, tx.timeout, tx.deposit);
            known.push_back({id, crypto::generate_key(rng)});
          } catch (const Error&) {
          }
        } else {
          l.submit_tx({r.address(), tx});
        }
        // Pick up channels created by queued transactions later on.
      } else if (roll < 55) {
        const auto& ch = known[rng.uniform(known.size())];
        ledger::Coins deposit = l.has_channel(ch.id) ? l.channel(ch.id).deposit : 1000;
        ledger::Coins v = rng.uniform(deposit + 2);
        auto kh = crypto::hash_key(ch.k);
        auto k = ch.k;
        bool valid = v <= deposit;
        auto flavour = rng.uniform(6);
        const crypto::SigningIdentity* sr = &r;
        const crypto::SigningIdentity* se = &e;
        if (flavour == 1) {
          k = crypto::generate_key(rng);
          valid = false;
        } else if (flavour == 2) {
          sr = &x;
          valid = false;
        } else if (flavour == 3) {
          se = &x;
          valid = false;
        }
        auto sh = ledger::state_hash(ch.id, v, kh);
        ledger::CloseChannelTx tx{ch.id, sr->sign(sh), se->sign(sh), v, kh, k};
        auto submitter = rng.uniform(2) == 0 ? e.address() : r.address();
        if (rng.uniform(2) == 0) {
          try {
            l.close_channel(submitter, tx.id, tx.sig_r, tx.sig_e, tx.v, tx.key_hash, tx.k);
            if (!valid) fail("direct invalid close succeeded");
            auto pk = l.published_key(tx.id);
            if (!pk || *pk != k) fail("direct close did not publish its key");
          } catch (const Error&) {
          }
        } else {
          auto id = l.submit_tx({submitter, tx});
          close_keys[id] = k;
          close_valid[id] = valid;
        }
      } else if (roll < 75) {
        const auto& ch = known[rng.uniform(known.size())];
        auto caller = rng.uniform(3) == 0 ? x.address() : r.address();
        if (rng.uniform(2) == 0) {
          try {
            auto before = l.now();
            l.channel_timeout(caller, ch.id);
            if (before < l.channel(ch.id).timeout) fail("direct timeout before the deadline");
          } catch (const Error&) {
          }
        } else {
          l.submit_tx({caller, ledger::ChannelTimeoutTx{ch.id}});
        }
      } else {
        auto receipts = l.advance_time(rng.uniform(3 * d + 5));
        for (const auto& rc : receipts) {
          if (rc.method == ledger::Method::InitChannel && rc.ok()) known.push_back({rc.contract, crypto::generate_key(rng)});
        }
      }
      check();
      if (!err.empty()) return;
    }
    for (const auto& rc : l.advance_time(10 * d + 100)) {
      if (rc.method == ledger::Method::InitChannel && rc.ok()) known.push_back({rc.contract, crypto::generate_key(rng)});
    }
    check();
    for (const auto& [id, ch] : l.channels()) {
      closed[seq] += ch.status == ledger::ChannelStatus::Closed;
      destroyed[seq] += ch.status == ledger::ChannelStatus::Destroyed;
    }
  });

  std::uint64_t total_ops = 0, n_closed = 0, n_destroyed = 0;
  for (auto n : ops) total_ops += n;
  for (auto n : closed) n_closed += n;
  for (auto n : destroyed) n_destroyed += n;
  o.require(n_closed > 0 && n_destroyed > 0, "sequences never reached a close and a timeout");
  for (const auto& er : errors) o.require(er.empty(), er);
  o.detail << kSequences << " random sequences, " << total_ops
           << " operations, " << n_closed << " closes, " << n_destroyed << " timeouts: conservation, payout <= deposit, full timeout refund, key published on close";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all{
      {1, "fair-exchange properties over the adversary matrix", criterion1},
      {2, "round counts for 1000 cycles", criterion2},
      {3, "state-based workload trends", criterion3},
      {4, "pure workload trends", criterion4},
      {5, "cost table", criterion5},
      {6, "composability and transferability", criterion6},
      {7, "Life engine against the naive reference", criterion7},
      {8, "ledger safety under random interleavings", criterion8},
  };
  std::cout << "# Criteria 3 and 4 check trends under the simulator's calibrated link and enclave\n"
               "# overhead models; absolute timings are model ticks, not measurements.\n";
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << c.title << " - "
              << o.detail.str() << " [" << std::fixed;
    std::cout.precision(1);
    std::cout << secs << " s]" << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
