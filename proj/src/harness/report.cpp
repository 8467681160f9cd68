#include "fairexec/harness/report.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "fairexec/error.hpp"
#include "fairexec/harness/runner.hpp"

namespace fairexec::harness {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::uint64_t to_u64(const std::string& s, std::size_t line, const std::string& column) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError,
                "line " + std::to_string(line) + ", column '" + column + "': not an integer: '" + s + "'");
  }
}

double mean(const std::vector<std::uint64_t>& v) {
  double s = 0;
  for (auto x : v) s += static_cast<double>(x);
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

ParsedCsv parse_csv(const std::string& text) {
  ParsedCsv out;
  std::istringstream in(text);
  std::string line;
  std::string yaml;
  bool in_config = false;
  bool saw_columns = false;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# sweep_field: ", 0) == 0) {
        auto f = line.substr(15);
        for (auto s : {SweepField::None, SweepField::CyclesPerRound, SweepField::Size, SweepField::TotalCycles,
                       SweepField::Rate}) {
          if (to_string(s) == f) out.sweep_field = s;
        }
      } else if (line == "# effective config:") {
        in_config = true;
      } else if (in_config && line.rfind("#   ", 0) == 0) {
        yaml += line.substr(4) + "\n";
      } else {
        in_config = false;
      }
      continue;
    }
    in_config = false;
    auto cells = split(line, ',');
    if (!saw_columns) {
      if (cells != kCsvColumns) {
        throw Error(ErrorCode::ConfigError, "line " + std::to_string(n) + ": unexpected column header");
      }
      saw_columns = true;
      continue;
    }
    if (cells.size() != kCsvColumns.size()) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(n) + ": expected " +
                                              std::to_string(kCsvColumns.size()) + " columns, got " +
                                              std::to_string(cells.size()));
    }
    CsvRow r;
    r.config_hash = cells[0];
    r.sweep_value = to_u64(cells[1], n, kCsvColumns[1]);
    r.seed = to_u64(cells[2], n, kCsvColumns[2]);
    r.rounds = to_u64(cells[3], n, kCsvColumns[3]);
    r.bytes_r_to_e = to_u64(cells[4], n, kCsvColumns[4]);
    r.bytes_e_to_r = to_u64(cells[5], n, kCsvColumns[5]);
    r.latency_ticks = to_u64(cells[6], n, kCsvColumns[6]);
    r.enclave_calls = to_u64(cells[7], n, kCsvColumns[7]);
    r.enclave_time_ticks = to_u64(cells[8], n, kCsvColumns[8]);
    r.fees_r = to_u64(cells[9], n, kCsvColumns[9]);
    r.fees_e = to_u64(cells[10], n, kCsvColumns[10]);
    r.outcome = cells[11];
    out.rows.push_back(std::move(r));
  }
  if (!saw_columns) throw Error(ErrorCode::ConfigError, "no column header found");
  if (!yaml.empty()) out.config = parse_config(yaml);
  return out;
}

Report make_report(const ParsedCsv& csv) {
  Report rep;
  std::ostringstream os;

  struct Agg {
    std::vector<std::uint64_t> rounds, latency, r2e, e2r, calls, etime;
  };
  std::map<std::uint64_t, Agg> by_value;
  std::map<std::uint64_t, std::vector<std::uint64_t>> etime_by_calls;
  for (const auto& r : csv.rows) {
    if (r.outcome != "completed") continue;
    auto& a = by_value[r.sweep_value];
    a.rounds.push_back(r.rounds);
    a.latency.push_back(r.latency_ticks);
    a.r2e.push_back(r.bytes_r_to_e);
    a.e2r.push_back(r.bytes_e_to_r);
    a.calls.push_back(r.enclave_calls);
    a.etime.push_back(r.enclave_time_ticks);
    etime_by_calls[r.enclave_calls].push_back(r.enclave_time_ticks);
  }

  os << "# Model-calibrated report: latency and enclave time are simulator ticks under the\n"
        "# configured link and enclave overhead constants, so ratios show trends, not real timings.\n";
  os << "sweep(" << to_string(csv.sweep_field) << ")\truns\trounds\tlatency_ticks\tbytes_r_to_e\tbytes_e_to_r\t"
        "enclave_calls\tenclave_time_ticks\n";
  for (const auto& [v, a] : by_value) {
    os << v << '\t' << a.rounds.size() << '\t' << fixed(mean(a.rounds), 1) << '\t' << fixed(mean(a.latency), 0)
       << '\t' << fixed(mean(a.r2e), 0) << '\t' << fixed(mean(a.e2r), 0) << '\t' << fixed(mean(a.calls), 1)
       << '\t' << fixed(mean(a.etime), 0) << '\n';
  }
  std::size_t skipped = 0;
  for (const auto& r : csv.rows) skipped += r.outcome != "completed";
  if (skipped) os << "(" << skipped << " runs without outcome 'completed' excluded)\n";

  if (csv.sweep_field == SweepField::CyclesPerRound && by_value.count(10) && by_value.count(200)) {
    double l200 = mean(by_value[200].latency);
    if (l200 > 0) rep.latency_ratio_10_200 = mean(by_value[10].latency) / l200;
  }
  if (etime_by_calls.count(100) && etime_by_calls.count(2)) {
    double e2 = mean(etime_by_calls[2]);
    if (e2 > 0) rep.enclave_ratio_100_2 = mean(etime_by_calls[100]) / e2;
  }
  os << "latency ratio cpr=10 / cpr=200: "
     << (rep.latency_ratio_10_200 ? fixed(*rep.latency_ratio_10_200) : std::string("n/a")) << '\n';
  os << "enclave time ratio 100 calls / 2 calls: "
     << (rep.enclave_ratio_100_2 ? fixed(*rep.enclave_ratio_100_2) : std::string("n/a")) << '\n';

  ledger::FeeSchedule fees = csv.config ? csv.config->base.fees : ledger::FeeSchedule{};
  rep.fee_table = ledger::format_fee_table(fees);
  os << "cost table (gas, USD at " << fixed(fees.usd_per_coin * 1e18, 0) << " USD/ether, gas price "
     << fees.gas_price / 1'000'000'000 << " gwei):\n"
     << rep.fee_table;

  std::uint64_t fr = 0, fe = 0;
  for (const auto& r : csv.rows) {
    fr += r.fees_r;
    fe += r.fees_e;
  }
  if (!csv.rows.empty()) {
    os << "fees paid over " << csv.rows.size() << " runs: requester "
       << ledger::format_usd(static_cast<double>(fr) * fees.usd_per_coin) << ", executor "
       << ledger::format_usd(static_cast<double>(fe) * fees.usd_per_coin) << '\n';
  }
  rep.text = os.str();
  return rep;
}

}  // namespace fairexec::harness
