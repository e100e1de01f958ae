#include "singerlab/synth/checks.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "singerlab/audio/mel.hpp"

namespace singerlab::synth {

std::vector<double> mean_log_mel_profile(const audio::AudioClip& clip) {
  std::vector<double> profile(audio::kMelBins, 0.0);
  int windows = 0;
  for (double off = 0.0; off + audio::kSegmentSeconds <= clip.duration_s() + 1e-9; off += audio::kSegmentSeconds) {
    const auto raw = audio::compute_log_mel_raw(clip.window(off));
    for (int m = 0; m < audio::kMelBins; ++m) {
      double s = 0.0;
      for (int t = 0; t < audio::kFrames; ++t) s += raw[static_cast<std::size_t>(m) * audio::kFrames + t];
      profile[m] += s / audio::kFrames;
    }
    ++windows;
  }
  for (double& v : profile) v /= std::max(1, windows);
  return profile;
}

CloneFidelity check_clone_fidelity(const CatalogManifest& manifest, std::uint64_t master_seed, double duration_s) {
  std::set<SingerId> candidates;
  for (const auto& e : manifest.entries) {
    if (e.pool == Pool::kIdentification) candidates.insert(e.singer_id);
  }
  auto distance = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
  };

  CloneFidelity result;
  for (const auto& e : manifest.entries) {
    if (!e.is_clone || !e.clone_source_singer) continue;
    const TrackRecord clone = render_entry(e, master_seed);
    const auto clone_profile =
        mean_log_mel_profile(render_voice_only(clone.rendered_timbre, e.render_seed, duration_s));
    SingerId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (SingerId s : candidates) {
      const auto p = mean_log_mel_profile(render_voice_only(make_singer(master_seed, s), e.render_seed, duration_s));
      const double d = distance(clone_profile, p);
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    ++result.clones_checked;
    if (best == *e.clone_source_singer) ++result.closest_to_source;
  }
  return result;
}

}  // namespace singerlab::synth
