#pragma once

#include <span>
#include <string>
#include <vector>

namespace singerlab::audio {

inline constexpr int kSampleRate = 16000;
inline constexpr int kSegmentSamples = 6 * kSampleRate;  // 96000
inline constexpr double kSegmentSeconds = 6.0;
inline constexpr double kActivityWindowSeconds = 3.0;

// Mono waveform at kSampleRate after ingestion.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }

  // 6 s window starting at offset_s; throws if out of range.
  std::span<const float> window(double offset_s, std::size_t length = kSegmentSamples) const;
};

enum class SourceKind { kMixture, kVocalStem, kInstrumentalStem };

const char* to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& s);

}  // namespace singerlab::audio
