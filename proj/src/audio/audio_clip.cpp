#include "singerlab/audio/audio_clip.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace singerlab::audio {

std::span<const float> AudioClip::window(double offset_s, std::size_t length) const {
  const auto start = static_cast<std::size_t>(std::llround(offset_s * sample_rate));
  if (offset_s < 0.0 || start + length > samples.size()) {
    throw std::out_of_range("window at " + std::to_string(offset_s) + " s exceeds clip of " +
                            std::to_string(duration_s()) + " s");
  }
  return std::span<const float>(samples).subspan(start, length);
}

const char* to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kMixture:
      return "mixture";
    case SourceKind::kVocalStem:
      return "vocal_stem";
    case SourceKind::kInstrumentalStem:
      return "instrumental_stem";
  }
  return "?";
}

SourceKind source_kind_from_string(const std::string& s) {
  if (s == "mixture") return SourceKind::kMixture;
  if (s == "vocal_stem" || s == "vocal") return SourceKind::kVocalStem;
  if (s == "instrumental_stem" || s == "instrumental") return SourceKind::kInstrumentalStem;
  throw std::invalid_argument("unknown source kind '" + s + "'");
}

}  // namespace singerlab::audio
