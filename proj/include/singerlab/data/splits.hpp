#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "singerlab/synth/catalog.hpp"

namespace singerlab::data {

using synth::CatalogEntry;
using synth::SingerId;

inline constexpr int kSplitSchemaVersion = 1;
inline constexpr int kIdValSegments = 4;

// Thresholds from the dataset construction rules.
inline constexpr double kTrainingVocalness = 0.75;
inline constexpr double kOpenSetVocalness = 0.5;
inline constexpr int kContrastiveMinTracks = 2;
inline constexpr int kOpenSetMinTracks = 5;
inline constexpr int kClosedSetMinTracks = 7;

enum class Role { kContrastiveTrain, kContrastiveVal, kIdTrain, kIdVal, kIdTest, kClonedEval };

const char* to_string(Role r);
Role role_from_string(const std::string& s);

struct SplitSpec {
  std::string mode;  // "contrastive" or "id"
  std::uint64_t seed = 0;
  std::map<std::string, Role> assignments;
  // Contrastive validation tracks carry 1 offset; ID validation tracks 4.
  std::map<std::string, std::vector<double>> fixed_val_segments;

  std::vector<std::string> tracks_with(Role role) const;
  bool operator==(const SplitSpec&) const = default;
};

// Keeps entries with vocal_fraction >= threshold, preserving order.
// threshold must lie in (0, 1].
std::vector<CatalogEntry> filter_vocalness(const std::vector<CatalogEntry>& entries, double threshold);

// Drops every track of singers with fewer than k entries in the input.
std::vector<CatalogEntry> filter_min_tracks(const std::vector<CatalogEntry>& entries, int k);

// Offsets of 6 s windows that are at least half vocal, on a `hop_s` grid.
std::vector<double> vocal_offsets(const CatalogEntry& entry, double hop_s);

// n_val_singers singers go to validation with exactly two tracks and one
// fixed segment each; the rest train. Requires >= 2 tracks per singer.
SplitSpec build_contrastive_split(const std::vector<CatalogEntry>& entries, int n_val_singers, std::uint64_t seed);

// Per singer: one test track, one validation track with four fixed segment
// offsets (sampled with replacement when the track has fewer than four
// vocal segments), the rest training. Clone entries whose source singer is
// in the pool become cloned_eval. Requires >= 5 real tracks per singer.
SplitSpec build_id_split(const std::vector<CatalogEntry>& entries, std::uint64_t seed);

// Exactly n singers: all of must_include plus a uniform draw from the rest.
std::vector<SingerId> sample_class_subset(const std::vector<SingerId>& id_singers, std::size_t n,
                                          const std::set<SingerId>& must_include, std::uint64_t seed);

std::string split_to_json(const SplitSpec& split);
SplitSpec split_from_json(const std::string& text);

// Structural checks: per-singer role counts, disjoint pools, fixed segment
// counts. Returns violations (empty when valid).
std::vector<std::string> validate_split(const SplitSpec& split, const synth::CatalogManifest& manifest);

}  // namespace singerlab::data
