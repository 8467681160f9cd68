#include "fairexec/workloads/ocr.hpp"

#include <limits>

namespace fairexec::workloads {
namespace {

constexpr std::uint8_t kInk = 255;
constexpr std::uint8_t kThreshold = 128;
constexpr std::uint32_t kScale = 4;
constexpr std::uint32_t kFontW = 5;
constexpr std::uint32_t kFontH = 7;

// clang-format off
constexpr std::array<std::array<const char*, kFontH>, 26> kFont = {{
  {" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},  // A
  {"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "},
  {" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "},
  {"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "},
  {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"},
  {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "},
  {" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ####"},
  {"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},
  {" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "},
  {"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "},
  {"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"},
  {"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"},
  {"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"},
  {"#   #", "#   #", "##  #", "# # #", "#  ##", "#   #", "#   #"},
  {" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},
  {"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "},
  {" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"},
  {"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"},
  {" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "},
  {"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "},
  {"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},
  {"#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "},
  {"#   #", "#   #", "#   #", "# # #", "# # #", "# # #", " # # "},
  {"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"},
  {"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "},
  {"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"},  // Z
}};
// clang-format on

std::vector<std::uint8_t> binarise(const Image& img) {
  std::vector<std::uint8_t> bits(img.pixels.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = img.pixels[i] >= kThreshold ? 1 : 0;
  return bits;
}

}  // namespace

void encode(ByteWriter& w, const Image& img) {
  w.u32(img.width);
  w.u32(img.height);
  w.raw(img.pixels);
}

Image decode_image(ByteReader& r) {
  Image img;
  img.width = r.u32();
  img.height = r.u32();
  auto px = r.raw(std::size_t{img.width} * img.height);
  img.pixels.assign(px.begin(), px.end());
  return img;
}

Bytes encode_image(const Image& img) {
  ByteWriter w;
  encode(w, img);
  return std::move(w).take();
}

Image decode_image(ByteView data) {
  ByteReader r(data);
  auto img = decode_image(r);
  r.expect_done();
  return img;
}

Image render_glyph(char letter, double noise, crypto::Rng* rng) {
  auto idx = kAlphabet.find(letter);
  if (idx == std::string_view::npos) {
    throw Error(ErrorCode::DecodeError, std::string("no glyph for '") + letter + "'");
  }
  Image img{kGlyphSide, kGlyphSide, Bytes(std::size_t{kGlyphSide} * kGlyphSide, 0)};
  const std::uint32_t ox = (kGlyphSide - kFontW * kScale) / 2;
  const std::uint32_t oy = (kGlyphSide - kFontH * kScale) / 2;
  const auto& rows = kFont[idx];
  for (std::uint32_t fy = 0; fy < kFontH; ++fy) {
    for (std::uint32_t fx = 0; fx < kFontW; ++fx) {
      if (rows[fy][fx] != '#') continue;
      for (std::uint32_t dy = 0; dy < kScale; ++dy) {
        for (std::uint32_t dx = 0; dx < kScale; ++dx) {
          img.pixels[std::size_t{oy + fy * kScale + dy} * kGlyphSide + ox + fx * kScale + dx] = kInk;
        }
      }
    }
  }
  if (noise > 0.0 && rng != nullptr) {
    for (auto& p : img.pixels) {
      if (rng->unit() < noise) p = static_cast<std::uint8_t>(kInk - p);
    }
  }
  return img;
}

MState encode_ocr(const OcrState& s) {
  ByteWriter w;
  w.u32(s.initial_count);
  for (const auto& img : s.queue) encode(w, img);
  return MState{std::string(kOcrTag), std::move(w).take()};
}

OcrState decode_ocr(const MState& s) {
  if (s.schema_tag != kOcrTag) throw Error(ErrorCode::SchemaMismatch, "not an ocr state");
  ByteReader r(s.blob);
  OcrState out;
  out.initial_count = r.u32();
  while (!r.done()) out.queue.push_back(decode_image(r));
  if (out.queue.size() > out.initial_count) {
    throw Error(ErrorCode::DecodeError, "ocr queue longer than its initial count");
  }
  return out;
}

std::string random_text(std::size_t n, crypto::Rng& rng) {
  std::string text(n, 'A');
  for (auto& c : text) c = kAlphabet[rng.uniform(kAlphabet.size())];
  return text;
}

OcrState make_ocr_state(std::string_view text, double noise, crypto::Rng& rng) {
  OcrState s;
  s.initial_count = static_cast<std::uint32_t>(text.size());
  s.queue.reserve(text.size());
  for (char c : text) s.queue.push_back(render_glyph(c, noise, &rng));
  return s;
}

OcrProgram::OcrProgram() {
  templates_.reserve(kAlphabet.size());
  for (char c : kAlphabet) templates_.push_back(binarise(render_glyph(c)));
}

std::string OcrProgram::code_identity() const {
  return "fairexec/ocr/hamming-nearest-template/32x32/A-Z/v1";
}

bool OcrProgram::is_terminal(const MState& s) const { return s.blob.size() <= 4; }

char OcrProgram::classify(const Image& img) const {
  if (img.width != kGlyphSide || img.height != kGlyphSide) return '?';
  auto bits = binarise(img);
  std::size_t best = 0;
  std::size_t best_dist = std::numeric_limits<std::size_t>::max();
  for (std::size_t t = 0; t < templates_.size(); ++t) {
    std::size_t dist = 0;
    const auto& tpl = templates_[t];
    for (std::size_t i = 0; i < bits.size(); ++i) dist += bits[i] != tpl[i];
    if (dist < best_dist) {
      best_dist = dist;
      best = t;
    }
  }
  return kAlphabet[best];
}

StepResult OcrProgram::advance(const MState& s, std::uint64_t cycles) const {
  if (s.schema_tag != kOcrTag) throw Error(ErrorCode::SchemaMismatch, "not an ocr state");
  ByteReader r(s.blob);
  r.u32();
  StepResult res;
  while (res.cycles_done < cycles && !r.done()) {
    auto img = decode_image(r);
    res.out.append(Bytes{static_cast<std::uint8_t>(classify(img))});
    ++res.cycles_done;
  }
  // Keep the header, drop the consumed prefix of the queue.
  std::size_t consumed_end = s.blob.size() - r.remaining();
  res.new_state.schema_tag = s.schema_tag;
  res.new_state.blob.assign(s.blob.begin(), s.blob.begin() + 4);
  res.new_state.blob.insert(res.new_state.blob.end(),
                            s.blob.begin() + static_cast<std::ptrdiff_t>(consumed_end),
                            s.blob.end());
  res.terminal = r.done();
  return res;
}

}  // namespace fairexec::workloads
