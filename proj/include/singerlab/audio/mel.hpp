#pragma once

#include <span>
#include <string>
#include <vector>

#include "singerlab/audio/audio_clip.hpp"

namespace singerlab::audio {

inline constexpr int kFftSize = 800;
inline constexpr int kHopSize = 400;
inline constexpr int kMelBins = 128;
inline constexpr int kFrames = kSegmentSamples / kHopSize;  // 240
inline constexpr int kFftBins = kFftSize / 2 + 1;          // 401
inline constexpr double kMelFmax = 8000.0;

// 128 x 240 log-mel matrix, row-major (mel bin, frame).
struct MelSegment {
  std::vector<float> values;
  std::string source_track;
  double offset_s = 0.0;
  SourceKind source_kind = SourceKind::kMixture;

  float at(int mel, int frame) const { return values[static_cast<std::size_t>(mel) * kFrames + frame]; }
};

// Slaney-scale triangular filters over [0, 8000] Hz with area normalisation.
// Stored sparsely: each filter covers bins [first_bin, first_bin + weights.size()).
struct MelFilter {
  int first_bin = 0;
  std::vector<float> weights;
};

const std::vector<MelFilter>& mel_filterbank();

// |DFT| of one 800-sample frame (already windowed) into 401 bins.
void magnitude_spectrum(std::span<const float> frame, std::span<float> magnitude);

const std::vector<float>& hann_window();

double hz_to_mel_slaney(double hz);
double mel_to_hz_slaney(double mel);

// log(1 + mel(|STFT|)) before per-segment standardisation. Frames are
// centred with 400-sample reflect padding; frames 0..239 are kept.
std::vector<float> compute_log_mel_raw(std::span<const float> segment);

// Full front end: compute_log_mel_raw followed by zero-mean / unit-std
// standardisation over the whole segment. A constant log-mel matrix maps
// to all zeros. Throws std::invalid_argument on wrong length or
// non-finite samples.
MelSegment compute_mel(std::span<const float> segment);

}  // namespace singerlab::audio
