#include "fairexec/workloads/catalog.hpp"

#include <fstream>
#include <sstream>

#include "fairexec/workloads/life.hpp"
#include "fairexec/workloads/ocr.hpp"

namespace fairexec::workloads {

void Catalog::add(CatalogEntry entry) {
  auto name = entry.name;
  entries_.insert_or_assign(std::move(name), std::move(entry));
}

const CatalogEntry& Catalog::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::UnknownWorkload, name);
  return it->second;
}

std::vector<std::string> Catalog::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

Instance Catalog::instantiate(const std::string& name, const WorkloadParams& params,
                              crypto::Rng& rng) const {
  const auto& e = get(name);
  return Instance{e.make_program(), e.make_state(params, rng)};
}

namespace {

MState make_life_state(const WorkloadParams& params, crypto::Rng& rng) {
  LifeState s;
  if (!params.pattern_file.empty()) {
    std::ifstream in(params.pattern_file);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open pattern file " + params.pattern_file);
    std::stringstream ss;
    ss << in.rdbuf();
    s.grid = parse_life_pattern(ss.str());
  } else {
    s.grid = random_grid(params.size, params.size, params.density, rng);
  }
  s.max_generations = params.max_generations;
  s.encoding = params.bit_packed ? CellEncoding::Bit : CellEncoding::Byte;
  return encode_life(s);
}

MState make_ocr(const WorkloadParams& params, crypto::Rng& rng) {
  auto text = random_text(params.size, rng);
  return encode_ocr(make_ocr_state(text, params.noise, rng));
}

Catalog build() {
  Catalog c;
  c.add(CatalogEntry{"life", std::string(kLifeTag), WorkloadParams{50, 0.35, 0.0, 0, false, {}},
                     [] { return std::make_shared<const LifeProgram>(); }, make_life_state});
  c.add(CatalogEntry{"ocr", std::string(kOcrTag), WorkloadParams{1000, 0.0, 0.0, 0, false, {}},
                     [] { return std::make_shared<const OcrProgram>(); }, make_ocr});
  return c;
}

}  // namespace

const Catalog& workload_register() {
  static const Catalog catalog = build();
  return catalog;
}

}  // namespace fairexec::workloads
