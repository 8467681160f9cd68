#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fairexec/crypto.hpp"
#include "fairexec/exec_model.hpp"

namespace fairexec::workloads {

// Knobs shared by the built-in workloads. `size` is the grid side for life
// and the image count for ocr.
struct WorkloadParams {
  std::uint32_t size = 50;
  double density = 0.35;
  double noise = 0.0;
  std::uint64_t max_generations = 0;
  bool bit_packed = false;
  std::string pattern_file;  // life only; overrides size/density when set
};

struct Instance {
  std::shared_ptr<const Program> program;
  MState initial_state;
};

struct CatalogEntry {
  std::string name;
  std::string schema_tag;
  WorkloadParams defaults;
  std::function<std::shared_ptr<const Program>()> make_program;
  std::function<MState(const WorkloadParams&, crypto::Rng&)> make_state;
};

class Catalog {
 public:
  void add(CatalogEntry entry);
  const CatalogEntry& get(const std::string& name) const;  // UnknownWorkload
  std::vector<std::string> names() const;

  Instance instantiate(const std::string& name, const WorkloadParams& params,
                       crypto::Rng& rng) const;

 private:
  std::map<std::string, CatalogEntry> entries_;
};

// The "life" and "ocr" workloads.
const Catalog& workload_register();

}  // namespace fairexec::workloads
