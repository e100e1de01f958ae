#include "singerlab/audio/activity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "singerlab/audio/mel.hpp"

namespace singerlab::audio {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
  }
  return m;
}

}  // namespace

VocalActivity VocalActivity::from_flags(std::vector<bool> flags) {
  VocalActivity a;
  a.flags = std::move(flags);
  const auto on = std::count(a.flags.begin(), a.flags.end(), true);
  a.vocal_fraction = a.flags.empty() ? 0.0 : static_cast<double>(on) / a.flags.size();
  return a;
}

std::size_t activity_window_count(double duration_s) {
  return static_cast<std::size_t>(std::floor(duration_s / kActivityWindowSeconds + 1e-9));
}

std::vector<bool> GroundTruthActivity::flags(const AudioClip& clip) const {
  const std::size_t n = activity_window_count(clip.duration_s());
  if (mask_.size() < n) {
    throw std::invalid_argument("ground-truth mask has " + std::to_string(mask_.size()) +
                                " windows, clip needs " + std::to_string(n));
  }
  return {mask_.begin(), mask_.begin() + static_cast<long>(n)};
}

std::vector<bool> EnergyHeuristicActivity::flags(const AudioClip& clip) const {
  const std::size_t n_windows = activity_window_count(clip.duration_s());
  const auto window_len = static_cast<std::size_t>(kActivityWindowSeconds * clip.sample_rate);
  const double bin_hz = static_cast<double>(clip.sample_rate) / kFftSize;
  const int lo_bin = static_cast<int>(std::ceil(200.0 / bin_hz));
  const int hi_bin = std::min(kFftBins - 1, static_cast<int>(std::floor(4000.0 / bin_hz)));
  const auto& window = hann_window();

  std::vector<float> frame(kFftSize), mag(kFftBins);
  std::vector<double> energies(n_windows, 0.0);
  for (std::size_t w = 0; w < n_windows; ++w) {
    const std::size_t start = w * window_len;
    for (std::size_t f = start; f + kFftSize <= start + window_len; f += kHopSize) {
      for (int i = 0; i < kFftSize; ++i) frame[i] = clip.samples[f + i] * window[i];
      magnitude_spectrum(frame, mag);
      for (int k = lo_bin; k <= hi_bin; ++k) {
        std::vector<double> neighbourhood;
        for (int j = std::max(0, k - 4); j <= std::min(kFftBins - 1, k + 4); ++j) neighbourhood.push_back(mag[j]);
        const double residual = std::max(0.0, mag[k] - median(std::move(neighbourhood)));
        energies[w] += residual * residual;
      }
    }
  }
  const double threshold = 1.5 * median(energies);
  std::vector<bool> out(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) out[w] = energies[w] > threshold;
  return out;
}

VocalActivity measure_activity(const AudioClip& clip, const ActivityProvider& provider) {
  if (clip.duration_s() + 1e-9 < kActivityWindowSeconds) {
    throw std::invalid_argument("measure_activity needs at least 3 s of audio, got " +
                                std::to_string(clip.duration_s()) + " s");
  }
  return VocalActivity::from_flags(provider.flags(clip));
}

std::vector<double> segment_track(double duration_s, const VocalActivity& activity, double hop_s) {
  if (hop_s <= 0.0) throw std::invalid_argument("segment_track: hop must be positive");
  if (duration_s + 1e-9 < kSegmentSeconds) {
    throw std::invalid_argument("segment_track: clip shorter than one segment");
  }
  const double w = activity.window_s;
  std::vector<double> offsets;
  for (long k = 0;; ++k) {
    const double start = static_cast<double>(k) * hop_s;
    const double end = start + kSegmentSeconds;
    if (end > duration_s + 1e-9) break;
    double vocal = 0.0;
    for (std::size_t i = 0; i < activity.flags.size(); ++i) {
      if (!activity.flags[i]) continue;
      const double a = std::max(start, i * w);
      const double b = std::min(end, (i + 1) * w);
      if (b > a) vocal += b - a;
    }
    if (vocal + 1e-9 >= 0.5 * kSegmentSeconds) offsets.push_back(start);
  }
  return offsets;
}

std::vector<double> segment_track(const AudioClip& clip, const VocalActivity& activity, double hop_s) {
  return segment_track(clip.duration_s(), activity, hop_s);
}

}  // namespace singerlab::audio
