#include <gtest/gtest.h>

#include <algorithm>

#include "fairexec/error.hpp"
#include "fairexec/messages.hpp"
#include "fairexec/scenario.hpp"

using namespace fairexec;
using namespace fairexec::protocol;

namespace {

crypto::Digest digest_of(std::uint8_t fill) {
  crypto::Digest d;
  d.bytes.fill(fill);
  return d;
}

Message envelope(Body body) {
  Message m;
  m.sender.bytes.fill(0x11);
  m.seq = 77;
  m.contract = digest_of(0x22);
  m.body = std::move(body);
  return m;
}

ScenarioConfig small_life() {
  ScenarioConfig c;
  c.workload = "life";
  c.params.size = 10;
  c.total_cycles = 100;
  c.cycles_per_round = 10;
  return c;
}

// The scenario draws the workload instance first from Rng(seed); replaying
// that draw gives the uninterrupted reference computation.
StepResult reference(const ScenarioConfig& c) {
  crypto::Rng rng(c.seed);
  auto inst = workloads::workload_register().instantiate(c.workload, c.params, rng);
  return step(*inst.program, inst.initial_state, c.total_cycles);
}

std::string violations(const ScenarioResult& r) {
  std::string s;
  for (const auto& v : r.properties.violations) s += v + "; ";
  return s;
}

}  // namespace

TEST(Messages, EveryVariantRoundTrips) {
  crypto::Rng rng(5);
  auto id = crypto::SigningIdentity::generate(rng);
  auto key = crypto::generate_key(rng);

  tee::WrappedResult wr;
  wr.input_digest = digest_of(1);
  wr.mode = tee::ResultMode::FullState;
  wr.enc_state = crypto::encrypt(key, Bytes{1, 2, 3});
  wr.enc_out = crypto::encrypt(key, Bytes{});
  wr.cycles_done = 9;
  wr.key_hash = crypto::hash_key(key);
  wr.terminal = true;
  wr.attestation = id.sign(digest_of(4));

  std::vector<Body> bodies{
      Request{"life", MState{"life", Bytes{9, 8, 7}}, 1000, 3, tee::ResultMode::Diff},
      Accept{id.address(), tee::AttestationRecord{digest_of(3), id.address()}},
      Reject{"busy"},
      RoundResult{4, 10, wr},
      Update{ledger::sign_update(id, digest_of(2), 600, digest_of(6))},
      KeyReveal{4, key},
      Continue{250},
      Terminate{},
  };
  std::uint8_t expected_variant = 1;
  for (const auto& b : bodies) {
    auto m = envelope(b);
    auto bytes = encode(m);
    EXPECT_EQ(bytes[0], expected_variant);
    auto back = decode(bytes);
    EXPECT_EQ(static_cast<int>(back.variant()), expected_variant);
    EXPECT_EQ(back.sender, m.sender);
    EXPECT_EQ(back.seq, 77u);
    EXPECT_EQ(back.contract, m.contract);
    EXPECT_EQ(encode(back), bytes);
    ++expected_variant;
  }
  auto rr = std::get<RoundResult>(decode(encode(envelope(RoundResult{4, 10, wr}))).body);
  EXPECT_EQ(rr.result, wr);
  auto rq = std::get<Request>(decode(encode(envelope(bodies[0]))).body);
  EXPECT_EQ(rq.function_id, "life");
  EXPECT_EQ(rq.state.blob, (Bytes{9, 8, 7}));
  EXPECT_EQ(rq.mode, tee::ResultMode::Diff);
}

TEST(Messages, RejectsTrailingAndTruncatedBytes) {
  auto bytes = encode(envelope(Continue{3}));
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(decode(longer), Error);
  auto shorter = bytes;
  shorter.pop_back();
  EXPECT_THROW(decode(shorter), Error);
  auto bad = bytes;
  bad[0] = 0;
  EXPECT_THROW(decode(bad), Error);
  bad[0] = 9;
  EXPECT_THROW(decode(bad), Error);
}

TEST(Messages, TamperChangesEveryVariant) {
  for (const auto& b : std::vector<Body>{Continue{3}, Terminate{}, Reject{"x"}}) {
    auto bytes = encode(envelope(b));
    auto t = tamper_message(bytes);
    EXPECT_NE(t, bytes);
    EXPECT_NO_THROW(decode(t));
  }
}

TEST(Scenario, HonestLifeRunSettlesExactly) {
  auto c = small_life();
  auto r = run_scenario(c);
  ASSERT_TRUE(r.completed) << r.trace;
  EXPECT_TRUE(r.properties.ok()) << violations(r);
  EXPECT_TRUE(r.properties.requester_safety_checked && r.properties.executor_safety_checked && r.properties.bounded_loss_checked &&
              r.properties.coherence_checked);
  EXPECT_EQ(r.metrics.outcome, "completed");
  EXPECT_EQ(r.metrics.rounds, 10u);
  EXPECT_EQ(r.metrics.enclave_calls, 10u);
  EXPECT_EQ(r.metrics.enclave_time_ticks, 10u * 4000 + 100u * 90);
  EXPECT_EQ(r.cycles_completed, 100u);

  auto ref = reference(c);
  EXPECT_EQ(r.final_state, ref.new_state);
  EXPECT_EQ(r.outputs, ref.out);

  ASSERT_EQ(r.channels.size(), 1u);
  const auto& ch = r.channels[0];
  EXPECT_EQ(ch.status, ledger::ChannelStatus::Closed);
  EXPECT_EQ(ch.deposit, 100u);
  EXPECT_EQ(ch.paid_to_executor, 100u);
  EXPECT_EQ(ch.refunded_to_requester, 0u);
  EXPECT_EQ(r.requester.sessions[0].b, 100u);
  EXPECT_EQ(r.executors[0].b, 100u);
  EXPECT_EQ(r.executors[0].accepted_updates.size(), 10u);
  EXPECT_EQ(r.metrics.fees_r, c.fees.fee(ledger::Method::InitChannel));
  EXPECT_EQ(r.metrics.fees_e, c.fees.fee(ledger::Method::CloseChannel));
  EXPECT_EQ(r.in_flight_at_end, 0u);
}

TEST(Scenario, PartialDepositPaysSignedAmount) {
  auto c = small_life();
  c.total_cycles = 60;
  c.deposit = 1000;
  auto r = run_scenario(c);
  ASSERT_TRUE(r.completed);
  EXPECT_TRUE(r.properties.ok()) << violations(r);
  ASSERT_EQ(r.channels.size(), 1u);
  EXPECT_EQ(r.channels[0].paid_to_executor, 60u);
  EXPECT_EQ(r.channels[0].refunded_to_requester, 940u);
  EXPECT_EQ(r.requester.paid.back().update.v, 60u);
}

TEST(Scenario, RateScalesPayout) {
  auto c = small_life();
  c.rate = 10;
  c.total_cycles = 60;
  auto r = run_scenario(c);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.channels[0].paid_to_executor, 600u);
}

TEST(Scenario, RoundsIsCeilingOfTotalOverSplit) {
  for (std::uint64_t cpr : {7u, 10u, 33u, 95u, 200u}) {
    auto c = small_life();
    c.total_cycles = 95;
    c.cycles_per_round = cpr;
    auto r = run_scenario(c);
    ASSERT_TRUE(r.completed);
    EXPECT_EQ(r.metrics.rounds, (95 + cpr - 1) / cpr) << cpr;
    EXPECT_EQ(r.final_state, reference(c).new_state);
  }
}

TEST(Scenario, OcrDiffModeMatchesReference) {
  ScenarioConfig c;
  c.workload = "ocr";
  c.params.size = 40;
  c.total_cycles = 40;
  c.cycles_per_round = 15;
  c.mode = tee::ResultMode::Diff;
  auto r = run_scenario(c);
  ASSERT_TRUE(r.completed);
  EXPECT_TRUE(r.properties.ok()) << violations(r);
  auto ref = reference(c);
  EXPECT_EQ(r.final_state, ref.new_state);
  EXPECT_EQ(r.outputs, ref.out);
  EXPECT_EQ(r.metrics.rounds, 3u);
}

TEST(Scenario, SameSeedSameTrace) {
  auto c = small_life();
  auto a = run_scenario(c);
  auto b = run_scenario(c);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.ledger_trace, b.ledger_trace);
  EXPECT_EQ(a.end_tick, b.end_tick);
  c.seed = 2;
  auto d = run_scenario(c);
  EXPECT_NE(a.initial_state, d.initial_state);
  EXPECT_NE(a.ledger_trace, d.ledger_trace);
}

TEST(Scenario, WrongExecutorAddressIsRefundedInFull) {
  auto c = small_life();
  c.requester = {RequesterBehavior::WrongExecutorAddress, 0};
  auto r = run_scenario(c);
  EXPECT_FALSE(r.completed);
  EXPECT_TRUE(r.properties.ok()) << violations(r);
  EXPECT_EQ(r.executors[0].rounds_executed, 0u);
  ASSERT_EQ(r.channels.size(), 1u);
  EXPECT_EQ(r.channels[0].status, ledger::ChannelStatus::Destroyed);
  EXPECT_EQ(r.channels[0].refunded_to_requester, r.channels[0].deposit);
  EXPECT_EQ(r.metrics.outcome, "refunded");
}

TEST(Scenario, WithheldKeyIsReadFromTheLedger) {
  auto c = small_life();
  c.executor = {ExecutorBehavior::WithholdKeySettle, 3};
  auto r = run_scenario(c);
  EXPECT_TRUE(r.properties.ok()) << violations(r);
  auto from_ledger = std::count_if(r.requester.keys.begin(), r.requester.keys.end(),
                                   [](const ObtainedKey& k) { return k.source == KeySource::Ledger; });
  EXPECT_EQ(from_ledger, 1);
  EXPECT_EQ(r.channels[0].status, ledger::ChannelStatus::Closed);
  EXPECT_EQ(r.channels[0].paid_to_executor, 40u);
  EXPECT_EQ(r.cycles_completed, 40u);
}

TEST(Scenario, OfflineExecutorLeadsToTimeoutRefund) {
  auto c = small_life();
  c.executor = {ExecutorBehavior::CrashBeforeReveal, 0};
  auto r = run_scenario(c);
  EXPECT_TRUE(r.properties.ok()) << violations(r);
  EXPECT_FALSE(r.completed);
  ASSERT_EQ(r.channels.size(), 1u);
  EXPECT_EQ(r.channels[0].status, ledger::ChannelStatus::Destroyed);
  EXPECT_EQ(r.channels[0].refunded_to_requester, r.channels[0].deposit);
  EXPECT_GE(r.end_tick, r.requester.sessions[0].timeout);
}

TEST(Scenario, TransferToSecondExecutorMatchesSingleRun) {
  for (auto b : {ExecutorBehavior::CrashAfterReveal, ExecutorBehavior::CrashBeforeReveal}) {
    auto c = small_life();
    c.total_cycles = 97;
    c.executors = 2;
    c.executor = {b, 4};
    auto r = run_scenario(c);
    ASSERT_TRUE(r.completed) << to_string(b);
    EXPECT_TRUE(r.properties.ok()) << violations(r);
    EXPECT_EQ(r.requester.sessions.size(), 2u);
    auto ref = reference(c);
    EXPECT_EQ(r.final_state, ref.new_state);
    EXPECT_EQ(r.outputs, ref.out);
    // The crashed executor never settles, so its channel ends in a refund.
    EXPECT_EQ(r.metrics.outcome, "completed-refunded");
  }
}

TEST(Scenario, TamperedResultIsNeverPaidFor) {
  auto c = small_life();
  c.faults.push_back({Party::Executor, Variant::RoundResult, 2, net::FaultAction::Tamper, 0});
  auto r = run_scenario(c);
  EXPECT_TRUE(r.properties.ok()) << violations(r);
  for (const auto& p : r.requester.paid) {
    EXPECT_TRUE(tee::verify_attested(p.result.result, p.attestation.expected_measurement,
                                     p.attestation.attestation_address));
  }
  EXPECT_EQ(r.requester.paid.size(), 2u);
}

TEST(Scenario, EveryBehaviourKeepsAtMostOneUnpaidRound) {
  for (auto b : all_executor_behaviors()) {
    auto c = small_life();
    c.executor = {b, 2};
    auto r = run_scenario(c);
    EXPECT_TRUE(r.properties.ok()) << to_string(b) << ": " << violations(r);
    EXPECT_EQ(r.traffic.sent_messages, r.traffic.delivered_messages + r.traffic.dropped_messages);
  }
  for (auto b : all_requester_behaviors()) {
    auto c = small_life();
    c.requester = {b, 2};
    auto r = run_scenario(c);
    EXPECT_TRUE(r.properties.ok()) << to_string(b) << ": " << violations(r);
    EXPECT_LE(r.properties.max_unpaid_rounds, 1u) << to_string(b);
    ASSERT_FALSE(r.executors.empty());
    EXPECT_LE(r.executors[0].rounds_executed, r.executors[0].accepted_updates.size() + 1) << to_string(b);
  }
}

TEST(Scenario, LivelockSurfacesAsTickLimit) {
  auto c = small_life();
  c.tick_limit = 1000;
  try {
    run_scenario(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TickLimitExceeded);
  }
}
