#pragma once

#include <vector>

#include "singerlab/synth/catalog.hpp"

namespace singerlab::synth {

// Frame-averaged raw log-mel spectrum over the clip's non-overlapping 6 s
// windows (128 values).
std::vector<double> mean_log_mel_profile(const audio::AudioClip& clip);

struct CloneFidelity {
  int clones_checked = 0;
  int closest_to_source = 0;
  double rate() const { return clones_checked ? static_cast<double>(closest_to_source) / clones_checked : 0.0; }
};

// For each clone entry, renders the clone's voice and every candidate
// singer's voice over the clone's pitch contour (dry, ungated) and checks
// whether the source singer is the nearest in mean log-mel distance.
// Candidates are the ID-pool singers of the manifest.
CloneFidelity check_clone_fidelity(const CatalogManifest& manifest, std::uint64_t master_seed,
                                   double duration_s = 24.0);

}  // namespace singerlab::synth
