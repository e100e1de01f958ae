#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <tuple>

#include "singerlab/audio/audio_clip.hpp"
#include "singerlab/audio/mel.hpp"
#include "singerlab/synth/catalog.hpp"

namespace singerlab::data {

// Lazily computed, memoised 6 s mels keyed by (track, source kind, offset).
// Stem paths in the manifest are relative to root.
class MelStore {
 public:
  MelStore(const synth::CatalogManifest& manifest, std::filesystem::path root);

  const audio::MelSegment& get(const std::string& track_id, audio::SourceKind kind, double offset_s);
  const synth::CatalogManifest& manifest() const { return *manifest_; }
  const std::filesystem::path& root() const { return root_; }

  std::size_t cached() const { return cache_.size(); }
  void clear() { cache_.clear(); }

 private:
  using Key = std::tuple<std::string, int, long long>;
  const audio::AudioClip& clip(const synth::CatalogEntry& entry, audio::SourceKind kind);

  const synth::CatalogManifest* manifest_;
  std::filesystem::path root_;
  std::map<Key, audio::MelSegment> cache_;
  std::string clip_key_;
  audio::AudioClip clip_;
};

// Path of a stem, or throws when the track has no such stem.
std::filesystem::path stem_path(const synth::CatalogEntry& entry, audio::SourceKind kind,
                                const std::filesystem::path& root);

}  // namespace singerlab::data
