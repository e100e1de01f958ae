#pragma once

#include <memory>
#include <vector>

#include "singerlab/audio/audio_clip.hpp"

namespace singerlab::audio {

// One flag per full, non-overlapping 3 s window.
struct VocalActivity {
  double window_s = kActivityWindowSeconds;
  std::vector<bool> flags;
  double vocal_fraction = 0.0;

  static VocalActivity from_flags(std::vector<bool> flags);
};

std::size_t activity_window_count(double duration_s);

class ActivityProvider {
 public:
  virtual ~ActivityProvider() = default;
  // Returns exactly activity_window_count(clip.duration_s()) flags.
  virtual std::vector<bool> flags(const AudioClip& clip) const = 0;
};

// Replays a known vocal mask, e.g. the synthetic generator's.
class GroundTruthActivity final : public ActivityProvider {
 public:
  explicit GroundTruthActivity(std::vector<bool> mask) : mask_(std::move(mask)) {}
  std::vector<bool> flags(const AudioClip& clip) const override;

 private:
  std::vector<bool> mask_;
};

// Energy heuristic for external audio: per frame, the harmonic residual is
// the magnitude spectrum minus its 9-bin running median across frequency
// (clamped at zero). Its 200-4000 Hz energy is summed per 3 s window and a
// window is vocal iff that energy exceeds 1.5x the median window energy.
class EnergyHeuristicActivity final : public ActivityProvider {
 public:
  std::vector<bool> flags(const AudioClip& clip) const override;
};

// Throws std::invalid_argument for clips shorter than 3 s.
VocalActivity measure_activity(const AudioClip& clip, const ActivityProvider& provider);

// Offsets (multiples of hop_s, ascending) of 6 s windows inside
// [0, duration_s] whose overlap with vocal-flagged 3 s windows is at least
// half the window span.
std::vector<double> segment_track(double duration_s, const VocalActivity& activity,
                                  double hop_s = kSegmentSeconds);

std::vector<double> segment_track(const AudioClip& clip, const VocalActivity& activity,
                                  double hop_s = kSegmentSeconds);

}  // namespace singerlab::audio
