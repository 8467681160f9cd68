#include "fairexec/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "fairexec/error.hpp"

namespace fairexec::harness {

using protocol::ExecutorBehavior;
using protocol::RequesterBehavior;
using protocol::Variant;

std::string_view to_string(SweepField f) {
  switch (f) {
    case SweepField::None: return "none";
    case SweepField::CyclesPerRound: return "cycles_per_round";
    case SweepField::Size: return "size";
    case SweepField::TotalCycles: return "total_cycles";
    case SweepField::Rate: return "rate";
  }
  return "none";
}

std::string_view to_string(net::FaultAction a) {
  switch (a) {
    case net::FaultAction::Drop: return "drop";
    case net::FaultAction::Tamper: return "tamper";
    case net::FaultAction::Replay: return "replay";
    case net::FaultAction::Delay: return "delay";
    case net::FaultAction::Partition: return "partition";
  }
  return "drop";
}

RequesterBehavior requester_behavior_from(const std::string& s) {
  if (s == "honest") return RequesterBehavior::Honest;
  for (auto b : protocol::all_requester_behaviors()) {
    if (protocol::to_string(b) == s) return b;
  }
  throw Error(ErrorCode::ConfigError, "unknown requester behaviour '" + s + "'");
}

ExecutorBehavior executor_behavior_from(const std::string& s) {
  if (s == "honest") return ExecutorBehavior::Honest;
  for (auto b : protocol::all_executor_behaviors()) {
    if (protocol::to_string(b) == s) return b;
  }
  throw Error(ErrorCode::ConfigError, "unknown executor behaviour '" + s + "'");
}

Variant variant_from(const std::string& s) {
  for (int i = 1; i <= 8; ++i) {
    auto v = static_cast<Variant>(i);
    if (protocol::to_string(v) == s) return v;
  }
  throw Error(ErrorCode::ConfigError, "unknown message type '" + s + "'");
}

net::FaultAction fault_action_from(const std::string& s) {
  for (auto a : {net::FaultAction::Drop, net::FaultAction::Tamper, net::FaultAction::Replay,
                 net::FaultAction::Delay, net::FaultAction::Partition}) {
    if (to_string(a) == s) return a;
  }
  throw Error(ErrorCode::ConfigError, "unknown fault action '" + s + "'");
}

namespace {

SweepField sweep_field_from(const std::string& s) {
  for (auto f : {SweepField::CyclesPerRound, SweepField::Size, SweepField::TotalCycles, SweepField::Rate}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown sweep field '" + s + "'");
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& msg) {
  std::ostringstream os;
  if (n.IsDefined() && n.Mark().line >= 0) os << "line " << n.Mark().line + 1 << ", ";
  os << "field '" << field << "': " << msg;
  throw Error(ErrorCode::ConfigError, os.str());
}

// Walks one mapping, remembering which keys were consumed so that typos are
// reported instead of silently ignored.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) fail(node_, path_, "expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull();
  }
  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_.IsMap() ? node_[key] : YAML::Node();
  }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out, const char* what) {
    if (!has(key)) return;
    auto n = node_[key];
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, field(key), std::string("expected ") + what);
    }
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (has(key) && node_[key].Scalar().find('-') != std::string::npos) {
      fail(node_[key], field(key), "expected a non-negative integer");
    }
    get(key, out, "a non-negative integer");
  }
  void str(const std::string& key, std::string& out) { get(key, out, "a string"); }

  Section sub(const std::string& key) { return Section(raw(key), field(key)); }

  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) fail(kv.first, field(k), "unknown field");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto named(const YAML::Node& n, const std::string& field, F parse) {
  try {
    return parse(n.as<std::string>());
  } catch (const Error& e) {
    fail(n, field, e.what());
  } catch (const YAML::Exception&) {
    fail(n, field, "expected a string");
  }
}

std::vector<std::uint64_t> u64_list(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) fail(n, field, "expected a list");
  std::vector<std::uint64_t> out;
  for (const auto& v : n) {
    try {
      if (v.Scalar().find('-') != std::string::npos) throw YAML::Exception(v.Mark(), "negative");
      out.push_back(v.as<std::uint64_t>());
    } catch (const YAML::Exception&) {
      fail(v, field, "expected a list of non-negative integers");
    }
  }
  if (out.empty()) fail(n, field, "list is empty");
  return out;
}

ExperimentConfig from_node(const YAML::Node& root, std::uint64_t default_seed) {
  ExperimentConfig cfg;
  cfg.seeds = {default_seed};
  auto& b = cfg.base;
  Section top(root, "");
  top.str("name", cfg.name);

  {
    auto w = top.sub("workload");
    w.str("name", b.workload);
    std::uint64_t size = b.params.size;
    w.u64("size", size);
    b.params.size = static_cast<std::uint32_t>(size);
    w.get("density", b.params.density, "a number");
    w.get("noise", b.params.noise, "a number");
    w.get("bit_packed", b.params.bit_packed, "a boolean");
    w.str("pattern_file", b.params.pattern_file);
    w.finish();
  }
  top.u64("total_cycles", b.total_cycles);
  top.u64("cycles_per_round", b.cycles_per_round);
  top.u64("rate", b.rate);
  if (top.has("deposit")) {
    std::uint64_t d = 0;
    top.u64("deposit", d);
    b.deposit = d;
  }
  if (top.has("mode")) {
    std::string m;
    top.str("mode", m);
    if (m == "full_state") {
      b.mode = tee::ResultMode::FullState;
    } else if (m == "diff") {
      b.mode = tee::ResultMode::Diff;
    } else {
      fail(top.raw("mode"), "mode", "expected full_state or diff");
    }
  }
  std::uint64_t executors = b.executors;
  top.u64("executors", executors);
  if (executors == 0) fail(top.raw("executors"), "executors", "need at least one executor");
  b.executors = executors;
  top.u64("tick_limit", b.tick_limit);
  top.get("write_traces", cfg.write_traces, "a boolean");
  {
    auto t = top.sub("timing");
    t.u64("patience", b.timing.patience);
    t.u64("timeout_span", b.timing.timeout_span);
    t.u64("settle_margin", b.timing.settle_margin);
    t.finish();
  }
  {
    auto l = top.sub("link");
    l.u64("latency", b.link.latency);
    l.u64("bytes_per_tick", b.link.bytes_per_tick);
    l.u64("overhead_bytes", b.link.overhead_bytes);
    l.finish();
  }
  {
    auto e = top.sub("enclave");
    e.u64("enter_exit_ticks", b.overhead.enter_exit_ticks);
    e.u64("per_cycle_ticks", b.overhead.per_cycle_ticks);
    e.u64("memory_limit", b.memory_limit);
    e.finish();
  }
  {
    auto f = top.sub("fees");
    f.u64("creation_gas", b.fees.creation_gas);
    f.u64("init_gas", b.fees.init_gas);
    f.u64("close_gas", b.fees.close_gas);
    f.u64("timeout_gas", b.fees.timeout_gas);
    f.u64("gas_price", b.fees.gas_price);
    if (f.has("usd_per_ether")) {
      double usd = 0;
      f.get("usd_per_ether", usd, "a number");
      b.fees.usd_per_coin = usd * 1e-18;
    }
    f.finish();
  }
  {
    auto l = top.sub("ledger");
    l.u64("liveness_bound", b.liveness_bound);
    l.u64("confirm_delay", b.confirm_delay);
    l.finish();
  }
  if (top.has("seeds")) cfg.seeds = u64_list(top.raw("seeds"), "seeds");
  if (top.has("sweep")) {
    auto s = top.sub("sweep");
    if (!s.has("field")) fail(top.raw("sweep"), "sweep.field", "missing");
    cfg.sweep_field = named(s.raw("field"), "sweep.field", sweep_field_from);
    if (!s.has("values")) fail(top.raw("sweep"), "sweep.values", "missing");
    cfg.sweep_values = u64_list(s.raw("values"), "sweep.values");
    s.finish();
  }
  if (top.has("requester")) {
    auto r = top.sub("requester");
    if (r.has("behavior")) b.requester.behavior = named(r.raw("behavior"), r.field("behavior"), requester_behavior_from);
    r.u64("round", b.requester.round);
    r.finish();
  }
  if (top.has("executor")) {
    auto e = top.sub("executor");
    if (e.has("behavior")) b.executor.behavior = named(e.raw("behavior"), e.field("behavior"), executor_behavior_from);
    e.u64("round", b.executor.round);
    e.finish();
  }
  if (top.has("faults")) {
    auto list = top.raw("faults");
    if (!list.IsSequence()) fail(list, "faults", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section f(list[i], "faults[" + std::to_string(i) + "]");
      protocol::NetFault nf;
      if (!f.has("party") || !f.has("message") || !f.has("action")) {
        fail(list[i], f.field("party"), "each fault needs party, message and action");
      }
      std::string party;
      f.str("party", party);
      if (party == "requester") {
        nf.party = protocol::Party::Requester;
      } else if (party == "executor") {
        nf.party = protocol::Party::Executor;
      } else {
        fail(f.raw("party"), f.field("party"), "expected requester or executor");
      }
      nf.variant = named(f.raw("message"), f.field("message"), variant_from);
      nf.action = named(f.raw("action"), f.field("action"), fault_action_from);
      f.u64("index", nf.index);
      f.u64("delay", nf.delay);
      f.finish();
      b.faults.push_back(nf);
    }
  }
  top.finish();

  if (b.cycles_per_round == 0) fail(root["cycles_per_round"], "cycles_per_round", "must be positive");
  if (b.total_cycles == 0) fail(root["total_cycles"], "total_cycles", "must be positive");
  for (auto v : cfg.sweep_values) {
    if (v == 0) fail(root["sweep"], "sweep.values", "values must be positive");
  }
  try {
    workloads::workload_register().get(b.workload);
  } catch (const Error& e) {
    fail(root["workload"], "workload.name", e.what());
  }
  return cfg;
}

}  // namespace

std::vector<std::pair<std::uint64_t, std::uint64_t>> ExperimentConfig::points() const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  std::vector<std::uint64_t> values = sweep_values;
  if (sweep_field == SweepField::None || values.empty()) values = {base.cycles_per_round};
  for (auto v : values) {
    for (auto s : seeds) out.emplace_back(v, s);
  }
  return out;
}

protocol::ScenarioConfig ExperimentConfig::at(std::uint64_t sweep_value, std::uint64_t seed) const {
  auto c = base;
  c.seed = seed;
  switch (sweep_field) {
    case SweepField::None: break;
    case SweepField::CyclesPerRound: c.cycles_per_round = sweep_value; break;
    case SweepField::Size: c.params.size = static_cast<std::uint32_t>(sweep_value); break;
    case SweepField::TotalCycles: c.total_cycles = sweep_value; break;
    case SweepField::Rate: c.rate = sweep_value; break;
  }
  return c;
}

ExperimentConfig parse_config(const std::string& text, std::uint64_t default_seed) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ConfigError,
                "line " + std::to_string(e.mark.line + 1) + ", column " + std::to_string(e.mark.column + 1) +
                    ": " + e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  return from_node(root, default_seed);
}

ExperimentConfig load_config(const std::string& path, std::uint64_t default_seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), default_seed);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + std::string(e.what()));
  }
}

std::string to_yaml(const ExperimentConfig& cfg) {
  const auto& b = cfg.base;
  YAML::Emitter out;
  out.SetDoublePrecision(15);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << cfg.name;
  out << YAML::Key << "workload" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << b.workload;
  out << YAML::Key << "size" << YAML::Value << b.params.size;
  out << YAML::Key << "density" << YAML::Value << b.params.density;
  out << YAML::Key << "noise" << YAML::Value << b.params.noise;
  out << YAML::Key << "bit_packed" << YAML::Value << b.params.bit_packed;
  if (!b.params.pattern_file.empty()) out << YAML::Key << "pattern_file" << YAML::Value << b.params.pattern_file;
  out << YAML::EndMap;
  out << YAML::Key << "total_cycles" << YAML::Value << b.total_cycles;
  out << YAML::Key << "cycles_per_round" << YAML::Value << b.cycles_per_round;
  out << YAML::Key << "rate" << YAML::Value << b.rate;
  if (b.deposit) out << YAML::Key << "deposit" << YAML::Value << *b.deposit;
  out << YAML::Key << "mode" << YAML::Value << (b.mode == tee::ResultMode::Diff ? "diff" : "full_state");
  out << YAML::Key << "executors" << YAML::Value << b.executors;
  out << YAML::Key << "tick_limit" << YAML::Value << b.tick_limit;
  out << YAML::Key << "timing" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "patience" << YAML::Value << b.timing.patience;
  out << YAML::Key << "timeout_span" << YAML::Value << b.timing.timeout_span;
  out << YAML::Key << "settle_margin" << YAML::Value << b.timing.settle_margin;
  out << YAML::EndMap;
  out << YAML::Key << "link" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "latency" << YAML::Value << b.link.latency;
  out << YAML::Key << "bytes_per_tick" << YAML::Value << b.link.bytes_per_tick;
  out << YAML::Key << "overhead_bytes" << YAML::Value << b.link.overhead_bytes;
  out << YAML::EndMap;
  out << YAML::Key << "enclave" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enter_exit_ticks" << YAML::Value << b.overhead.enter_exit_ticks;
  out << YAML::Key << "per_cycle_ticks" << YAML::Value << b.overhead.per_cycle_ticks;
  out << YAML::Key << "memory_limit" << YAML::Value << b.memory_limit;
  out << YAML::EndMap;
  out << YAML::Key << "fees" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "creation_gas" << YAML::Value << b.fees.creation_gas;
  out << YAML::Key << "init_gas" << YAML::Value << b.fees.init_gas;
  out << YAML::Key << "close_gas" << YAML::Value << b.fees.close_gas;
  out << YAML::Key << "timeout_gas" << YAML::Value << b.fees.timeout_gas;
  out << YAML::Key << "gas_price" << YAML::Value << b.fees.gas_price;
  out << YAML::Key << "usd_per_ether" << YAML::Value << b.fees.usd_per_coin * 1e18;
  out << YAML::EndMap;
  out << YAML::Key << "ledger" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "liveness_bound" << YAML::Value << b.liveness_bound;
  out << YAML::Key << "confirm_delay" << YAML::Value << b.confirm_delay;
  out << YAML::EndMap;
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << cfg.seeds;
  if (cfg.sweep_field != SweepField::None) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "field" << YAML::Value << std::string(to_string(cfg.sweep_field));
    out << YAML::Key << "values" << YAML::Value << YAML::Flow << cfg.sweep_values;
    out << YAML::EndMap;
  }
  if (!b.requester.honest()) {
    out << YAML::Key << "requester" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "behavior" << YAML::Value << std::string(protocol::to_string(b.requester.behavior));
    out << YAML::Key << "round" << YAML::Value << b.requester.round;
    out << YAML::EndMap;
  }
  if (!b.executor.honest()) {
    out << YAML::Key << "executor" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "behavior" << YAML::Value << std::string(protocol::to_string(b.executor.behavior));
    out << YAML::Key << "round" << YAML::Value << b.executor.round;
    out << YAML::EndMap;
  }
  if (!b.faults.empty()) {
    out << YAML::Key << "faults" << YAML::Value << YAML::BeginSeq;
    for (const auto& f : b.faults) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "party" << YAML::Value
          << (f.party == protocol::Party::Requester ? "requester" : "executor");
      out << YAML::Key << "message" << YAML::Value << std::string(protocol::to_string(f.variant));
      out << YAML::Key << "action" << YAML::Value << std::string(to_string(f.action));
      out << YAML::Key << "index" << YAML::Value << f.index;
      out << YAML::Key << "delay" << YAML::Value << f.delay;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  auto y = to_yaml(cfg);
  return crypto::hash(Bytes(y.begin(), y.end())).hex().substr(0, 16);
}

}  // namespace fairexec::harness
