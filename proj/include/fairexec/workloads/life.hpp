#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fairexec/crypto.hpp"
#include "fairexec/exec_model.hpp"

namespace fairexec::workloads {

inline constexpr std::string_view kLifeTag = "life";

// Row-major grid of 0/1 cells. Cells outside the grid are dead.
struct CellGrid {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> cells;

  CellGrid() = default;
  CellGrid(std::uint32_t w, std::uint32_t h) : width(w), height(h), cells(std::size_t{w} * h, 0) {}

  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return cells[std::size_t{y} * width + x]; }
  void set(std::uint32_t x, std::uint32_t y, bool alive) {
    cells[std::size_t{y} * width + x] = alive ? 1 : 0;
  }
  std::size_t population() const;
  bool operator==(const CellGrid&) const = default;
};

enum class CellEncoding : std::uint8_t { Byte = 0, Bit = 1 };

struct LifeState {
  CellGrid grid;
  std::uint64_t generation = 0;
  // 0 means the simulation never terminates on its own.
  std::uint64_t max_generations = 0;
  CellEncoding encoding = CellEncoding::Byte;

  bool operator==(const LifeState&) const = default;
};

// B3/S23, applied synchronously with a dead border.
CellGrid life_step_rules(const CellGrid& g);

MState encode_life(const LifeState& s);
LifeState decode_life(const MState& s);

// Throws DimensionMismatch when the two grids differ in size.
StateDiff life_diff(const MState& s, const MState& s2);

CellGrid random_grid(std::uint32_t width, std::uint32_t height, double density, crypto::Rng& rng);

// '.' dead, '#' alive, one row per line. Blank lines are ignored.
CellGrid parse_life_pattern(std::string_view text);
std::string format_life_pattern(const CellGrid& g);

class LifeProgram final : public Program {
 public:
  std::string_view schema_tag() const override { return kLifeTag; }
  std::string code_identity() const override { return "fairexec/life/B3S23/dead-border/v1"; }
  bool is_terminal(const MState& s) const override;
  StepResult advance(const MState& s, std::uint64_t cycles) const override;
};

}  // namespace fairexec::workloads
