#include "fairexec/workloads/life.hpp"

#include <algorithm>

namespace fairexec::workloads {

std::size_t CellGrid::population() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
}

CellGrid life_step_rules(const CellGrid& g) {
  const std::size_t w = g.width, h = g.height;
  const std::size_t pw = w + 2;
  // One-cell dead margin so the inner loop needs no bounds checks.
  std::vector<std::uint8_t> padded(pw * (h + 2), 0);
  for (std::size_t y = 0; y < h; ++y) {
    std::copy_n(g.cells.begin() + static_cast<std::ptrdiff_t>(y * w), w,
                padded.begin() + static_cast<std::ptrdiff_t>((y + 1) * pw + 1));
  }
  CellGrid next(g.width, g.height);
  for (std::size_t y = 0; y < h; ++y) {
    const std::uint8_t* up = &padded[y * pw];
    const std::uint8_t* mid = up + pw;
    const std::uint8_t* down = mid + pw;
    for (std::size_t x = 0; x < w; ++x) {
      int n = up[x] + up[x + 1] + up[x + 2] + mid[x] + mid[x + 2] + down[x] + down[x + 1] +
              down[x + 2];
      bool alive = mid[x + 1] != 0;
      next.cells[y * w + x] = (n == 3 || (alive && n == 2)) ? 1 : 0;
    }
  }
  return next;
}

MState encode_life(const LifeState& s) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(s.encoding));
  w.u32(s.grid.width);
  w.u32(s.grid.height);
  w.u64(s.generation);
  w.u64(s.max_generations);
  if (s.encoding == CellEncoding::Byte) {
    w.raw(s.grid.cells);
  } else {
    Bytes packed((s.grid.cells.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < s.grid.cells.size(); ++i) {
      if (s.grid.cells[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    w.raw(packed);
  }
  return MState{std::string(kLifeTag), std::move(w).take()};
}

LifeState decode_life(const MState& s) {
  if (s.schema_tag != kLifeTag) throw Error(ErrorCode::SchemaMismatch, "not a life state");
  ByteReader r(s.blob);
  LifeState out;
  auto enc = r.u8();
  if (enc > 1) throw Error(ErrorCode::DecodeError, "unknown life cell encoding");
  out.encoding = static_cast<CellEncoding>(enc);
  auto width = r.u32();
  auto height = r.u32();
  out.generation = r.u64();
  out.max_generations = r.u64();
  out.grid = CellGrid(width, height);
  std::size_t n = std::size_t{width} * height;
  if (out.encoding == CellEncoding::Byte) {
    auto cells = r.raw(n);
    for (std::size_t i = 0; i < n; ++i) out.grid.cells[i] = cells[i] ? 1 : 0;
  } else {
    auto packed = r.raw((n + 7) / 8);
    for (std::size_t i = 0; i < n; ++i) out.grid.cells[i] = (packed[i / 8] >> (i % 8)) & 1u;
  }
  r.expect_done();
  return out;
}

StateDiff life_diff(const MState& s, const MState& s2) {
  auto a = decode_life(s);
  auto b = decode_life(s2);
  if (a.grid.width != b.grid.width || a.grid.height != b.grid.height) {
    throw Error(ErrorCode::DimensionMismatch, "life grids differ in size");
  }
  return gen_diff(s, s2);
}

CellGrid random_grid(std::uint32_t width, std::uint32_t height, double density, crypto::Rng& rng) {
  CellGrid g(width, height);
  for (auto& c : g.cells) c = rng.unit() < density ? 1 : 0;
  return g;
}

CellGrid parse_life_pattern(std::string_view text) {
  std::vector<std::string_view> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) rows.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (rows.empty()) return {};
  CellGrid g(static_cast<std::uint32_t>(rows.front().size()), static_cast<std::uint32_t>(rows.size()));
  for (std::uint32_t y = 0; y < g.height; ++y) {
    if (rows[y].size() != g.width) {
      throw Error(ErrorCode::DecodeError, "ragged life pattern at row " + std::to_string(y + 1));
    }
    for (std::uint32_t x = 0; x < g.width; ++x) {
      char c = rows[y][x];
      if (c != '.' && c != '#') {
        throw Error(ErrorCode::DecodeError,
                    "unexpected character in life pattern at row " + std::to_string(y + 1));
      }
      g.set(x, y, c == '#');
    }
  }
  return g;
}

std::string format_life_pattern(const CellGrid& g) {
  std::string out;
  out.reserve((std::size_t{g.width} + 1) * g.height);
  for (std::uint32_t y = 0; y < g.height; ++y) {
    for (std::uint32_t x = 0; x < g.width; ++x) out.push_back(g.at(x, y) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

bool LifeProgram::is_terminal(const MState& s) const {
  // Only the header is needed.
  ByteReader r(s.blob);
  r.u8();
  r.u32();
  r.u32();
  auto generation = r.u64();
  auto max_generations = r.u64();
  return max_generations != 0 && generation >= max_generations;
}

StepResult LifeProgram::advance(const MState& s, std::uint64_t cycles) const {
  auto state = decode_life(s);
  std::uint64_t done = 0;
  while (done < cycles &&
         (state.max_generations == 0 || state.generation < state.max_generations)) {
    state.grid = life_step_rules(state.grid);
    ++state.generation;
    ++done;
  }
  bool terminal = state.max_generations != 0 && state.generation >= state.max_generations;
  return StepResult{encode_life(state), {}, done, terminal};
}

}  // namespace fairexec::workloads
