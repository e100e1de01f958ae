#include "singerlab/data/mel_store.hpp"

#include <cmath>
#include <stdexcept>

#include "singerlab/audio/wav.hpp"
#include "singerlab/common/error.hpp"

namespace singerlab::data {

std::filesystem::path stem_path(const synth::CatalogEntry& entry, audio::SourceKind kind,
                                const std::filesystem::path& root) {
  const std::string* rel = nullptr;
  switch (kind) {
    case audio::SourceKind::kMixture:
      rel = &entry.mixture_path;
      break;
    case audio::SourceKind::kVocalStem:
      rel = &entry.vocal_path;
      break;
    case audio::SourceKind::kInstrumentalStem:
      rel = &entry.instrumental_path;
      break;
  }
  if (rel->empty()) {
    throw std::invalid_argument("track " + entry.track_id + " has no " + audio::to_string(kind) + " stem");
  }
  return root / *rel;
}

MelStore::MelStore(const synth::CatalogManifest& manifest, std::filesystem::path root)
    : manifest_(&manifest), root_(std::move(root)) {}

const audio::AudioClip& MelStore::clip(const synth::CatalogEntry& entry, audio::SourceKind kind) {
  const std::string key = entry.track_id + "|" + audio::to_string(kind);
  if (key != clip_key_) {
    const auto path = stem_path(entry, kind, root_);
    if (!std::filesystem::exists(path)) throw MissingArtifactError(path.string(), "catalog build");
    clip_ = audio::load_audio_16k(path);
    clip_key_ = key;
  }
  return clip_;
}

const audio::MelSegment& MelStore::get(const std::string& track_id, audio::SourceKind kind, double offset_s) {
  const Key key{track_id, static_cast<int>(kind), std::llround(offset_s * 1000.0)};
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const auto& entry = manifest_->find(track_id);
  const auto& c = clip(entry, kind);
  const auto samples = c.window(offset_s, audio::kSegmentSamples);
  audio::MelSegment mel = audio::compute_mel(samples);
  mel.source_track = track_id;
  mel.offset_s = offset_s;
  mel.source_kind = kind;
  return cache_.emplace(key, std::move(mel)).first->second;
}

}  // namespace singerlab::data
