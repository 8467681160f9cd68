#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fairexec/crypto.hpp"
#include "fairexec/exec_model.hpp"

namespace fairexec::workloads {

inline constexpr std::string_view kOcrTag = "ocr";
inline constexpr std::uint32_t kGlyphSide = 32;
inline constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

// 8-bit grayscale bitmap. Wire form: u32 width, u32 height, pixels row-major.
struct Image {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  Bytes pixels;

  std::size_t encoded_size() const { return 8 + pixels.size(); }
  bool operator==(const Image&) const = default;
};

void encode(ByteWriter& w, const Image& img);
Image decode_image(ByteReader& r);
Bytes encode_image(const Image& img);
Image decode_image(ByteView data);

// Renders a letter of kAlphabet at kGlyphSide x kGlyphSide. With noise > 0,
// each pixel is inverted with that probability.
Image render_glyph(char letter, double noise = 0.0, crypto::Rng* rng = nullptr);

struct OcrState {
  std::uint32_t initial_count = 0;
  std::vector<Image> queue;

  std::uint32_t consumed_count() const {
    return initial_count - static_cast<std::uint32_t>(queue.size());
  }
  bool operator==(const OcrState&) const = default;
};

// Layout: u32 initial_count followed by the encoded images. The header never
// changes, so consuming images only ever removes bytes.
MState encode_ocr(const OcrState& s);
OcrState decode_ocr(const MState& s);

OcrState make_ocr_state(std::string_view text, double noise, crypto::Rng& rng);
std::string random_text(std::size_t n, crypto::Rng& rng);

class OcrProgram final : public Program {
 public:
  OcrProgram();

  std::string_view schema_tag() const override { return kOcrTag; }
  std::string code_identity() const override;
  bool is_terminal(const MState& s) const override;
  StepResult advance(const MState& s, std::uint64_t cycles) const override;

  // Nearest template by Hamming distance on binarised pixels; ties go to the
  // earlier letter. Images of the wrong size classify as '?'.
  char classify(const Image& img) const;

 private:
  std::vector<std::vector<std::uint8_t>> templates_;
};

}  // namespace fairexec::workloads
