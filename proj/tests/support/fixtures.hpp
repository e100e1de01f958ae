#pragma once

#include <filesystem>
#include <string>

#include "singerlab/data/splits.hpp"
#include "singerlab/synth/catalog.hpp"

namespace fixture {

// 8 contrastive singers x 3 tracks, 4 ID singers x 7 tracks, 2 clone
// sources x 1 clone, 24 s tracks. Rendered once per seed into the temp
// directory and reused.
inline singerlab::synth::CatalogConfig small_config() {
  singerlab::synth::CatalogConfig c;
  c.n_contrastive_singers = 8;
  c.contrastive_tracks_per_singer = 3;
  c.n_id_singers = 4;
  c.id_tracks_per_singer = 7;
  c.n_clone_sources = 2;
  c.clones_per_source = 1;
  c.min_duration_s = 24.0;
  c.max_duration_s = 24.0;
  return c;
}

inline std::filesystem::path small_catalog(std::uint64_t seed) {
  const auto dir = std::filesystem::temp_directory_path() / ("singerlab_fixture_" + std::to_string(seed));
  const auto cfg = small_config();
  if (std::filesystem::exists(dir / "manifest.jsonl")) {
    const auto m = singerlab::synth::read_manifest(dir / "manifest.jsonl");
    const auto planned = singerlab::synth::plan_catalog(cfg, seed);
    bool complete = m.entries == planned.entries;
    for (const auto& e : m.entries) {
      complete = complete && std::filesystem::exists(dir / e.mixture_path) && std::filesystem::exists(dir / e.vocal_path) &&
                 std::filesystem::exists(dir / e.instrumental_path);
    }
    if (complete) return dir;
  }
  singerlab::synth::build_catalog(cfg, seed, dir, 1);
  return dir;
}

struct Splits {
  singerlab::data::SplitSpec contrastive;
  singerlab::data::SplitSpec id;
};

inline Splits small_splits(const singerlab::synth::CatalogManifest& m, std::uint64_t seed) {
  using namespace singerlab;
  std::vector<synth::CatalogEntry> cpool, ireal;
  for (const auto& e : m.entries) {
    if (e.pool == synth::Pool::kContrastive) cpool.push_back(e);
    if (e.pool == synth::Pool::kIdentification) ireal.push_back(e);
  }
  auto ids = data::filter_min_tracks(data::filter_vocalness(ireal, data::kOpenSetVocalness), data::kOpenSetMinTracks);
  for (const auto& e : m.entries) {
    if (e.is_clone) ids.push_back(e);
  }
  return {data::build_contrastive_split(
              data::filter_min_tracks(data::filter_vocalness(cpool, data::kTrainingVocalness), 2), 2, seed),
          data::build_id_split(ids, seed)};
}

}  // namespace fixture
