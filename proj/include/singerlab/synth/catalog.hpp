#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "singerlab/synth/render.hpp"

namespace singerlab::synth {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kGeneratorVersion = "singerlab-synth/1.0";

enum class Pool { kContrastive, kIdentification, kCloned, kExternal };
const char* to_string(Pool p);
Pool pool_from_string(const std::string& s);

// One manifest line: track metadata plus stem paths relative to the
// manifest's directory. Audio itself lives in WAV files.
struct CatalogEntry {
  std::string track_id;
  SingerId singer_id = 0;
  Pool pool = Pool::kContrastive;
  Genre genre = Genre::kDry;
  StyleId instrumental_style_id = 0;
  double duration_s = 0.0;
  std::vector<bool> vocal_mask;
  bool is_clone = false;
  std::optional<SingerId> clone_source_singer;
  std::uint64_t render_seed = 0;
  double perturbation_level = 0.0;
  std::string mixture_path;
  std::string vocal_path;        // empty when no stem is available
  std::string instrumental_path;

  double vocal_fraction() const;
  bool operator==(const CatalogEntry&) const = default;
};

struct CatalogManifest {
  std::vector<CatalogEntry> entries;
  std::uint64_t master_seed = 0;
  std::string generator_version = kGeneratorVersion;

  const CatalogEntry& find(const std::string& track_id) const;
};

struct CatalogConfig {
  int n_contrastive_singers = 64;
  int contrastive_tracks_per_singer = 3;
  int n_id_singers = 24;
  int id_tracks_per_singer = 8;
  int n_clone_sources = 8;
  int clones_per_source = 4;
  double min_duration_s = 24.0;
  double max_duration_s = 30.0;
  double clone_perturbation = 0.1;
  double silence_prob = 0.1;
  std::array<double, 4> genre_weights{1.0, 1.0, 1.0, 1.0};  // dry, reverb, vocoder, electronic

  static CatalogConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// Metadata for every track without rendering audio. Singers
// [0, n_contrastive) form the contrastive pool, the next n_id the
// identification pool; singer k's real tracks use style k. Clone sources
// are drawn from the ID pool and sing over another ID singer's style.
// Throws std::invalid_argument on infeasible configs.
CatalogManifest plan_catalog(const CatalogConfig& config, std::uint64_t master_seed);

// Renders the audio for one planned entry.
TrackRecord render_entry(const CatalogEntry& entry, std::uint64_t master_seed);

// plan_catalog + render every entry + write stems (16-bit WAV) and
// manifest.jsonl under out_dir. jobs > 1 renders tracks concurrently.
CatalogManifest build_catalog(const CatalogConfig& config, std::uint64_t master_seed,
                              const std::filesystem::path& out_dir, int jobs = 1);

std::string manifest_to_jsonl(const CatalogManifest& manifest);
CatalogManifest manifest_from_jsonl(const std::string& text);

void write_manifest(const std::filesystem::path& path, const CatalogManifest& manifest);
CatalogManifest read_manifest(const std::filesystem::path& path);

// Manifest invariants: unique track ids, every clone source has at least
// one real track, masks match durations. Returns a list of violations.
std::vector<std::string> validate_manifest(const CatalogManifest& manifest);

// External audio: JSON-lines of {"path": ..., "singer": <int>, optional
// "vocal_path", "instrumental_path", "genre"}. Files are resampled to
// 16 kHz, activity is measured with the energy heuristic, and the result
// is written like a synthetic catalog.
CatalogManifest ingest_external(const std::filesystem::path& list_path, const std::filesystem::path& out_dir);

}  // namespace singerlab::synth
