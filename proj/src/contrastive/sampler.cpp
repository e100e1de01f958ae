#include "singerlab/contrastive/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace singerlab::contrastive {

using audio::SourceKind;

const char* to_string(Regime r) {
  switch (r) {
    case Regime::kMixture:
      return "mixture";
    case Regime::kVocal:
      return "vocal";
    case Regime::kHybrid:
      return "hybrid";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  if (s == "mixture") return Regime::kMixture;
  if (s == "vocal") return Regime::kVocal;
  if (s == "hybrid") return Regime::kHybrid;
  throw std::invalid_argument("unknown regime '" + s + "' (expected mixture, vocal or hybrid)");
}

SourceKind eval_kind(Regime r) { return r == Regime::kVocal ? SourceKind::kVocalStem : SourceKind::kMixture; }

PairSampler::PairSampler(const synth::CatalogManifest& manifest, const data::SplitSpec& split, Regime regime)
    : regime_(regime) {
  for (const auto& id : split.tracks_with(data::Role::kContrastiveTrain)) {
    const auto& e = manifest.find(id);
    auto offs = data::vocal_offsets(e, audio::kActivityWindowSeconds);
    if (offs.empty()) continue;
    if (regime != Regime::kMixture && e.vocal_path.empty()) {
      throw std::invalid_argument("track " + id + " has no vocal stem but the regime needs one");
    }
    tracks_[e.singer_id].push_back({id, std::move(offs)});
  }
  for (auto it = tracks_.begin(); it != tracks_.end();) {
    if (it->second.size() < 2) {
      it = tracks_.erase(it);
    } else {
      singers_.push_back(it->first);
      ++it;
    }
  }
  if (singers_.size() < 2) throw std::invalid_argument("need at least 2 singers with 2 usable tracks each");
}

PairBatch PairSampler::sample(int batch_pairs, Rng& rng) const {
  if (batch_pairs < 1) throw std::invalid_argument("batch_pairs must be >= 1");
  PairBatch batch;
  batch.regime = regime_;
  std::vector<synth::SingerId> chosen;
  if (static_cast<std::size_t>(batch_pairs) <= singers_.size()) {
    std::vector<synth::SingerId> pool = singers_;
    // partial Fisher-Yates
    for (int i = 0; i < batch_pairs; ++i) {
      const std::size_t j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    chosen.assign(pool.begin(), pool.begin() + batch_pairs);
  } else {
    for (int i = 0; i < batch_pairs; ++i) chosen.push_back(singers_[rng.index(singers_.size())]);
  }
  auto kind = [&]() {
    switch (regime_) {
      case Regime::kMixture:
        return SourceKind::kMixture;
      case Regime::kVocal:
        return SourceKind::kVocalStem;
      case Regime::kHybrid:
        break;
    }
    return rng.bernoulli(0.5) ? SourceKind::kVocalStem : SourceKind::kMixture;
  };
  for (auto s : chosen) {
    const auto& tracks = tracks_.at(s);
    const std::size_t a = rng.index(tracks.size());
    std::size_t b = rng.index(tracks.size() - 1);
    if (b >= a) ++b;
    for (std::size_t t : {a, b}) {
      const auto& tr = tracks[t];
      SegmentRef ref;
      ref.track_id = tr.id;
      ref.offset_s = tr.offsets[rng.index(tr.offsets.size())];
      ref.kind = kind();
      ref.singer_id = s;
      batch.inputs.push_back(std::move(ref));
    }
  }
  return batch;
}

std::vector<SegmentRef> PairSampler::all_segments() const {
  std::vector<SegmentRef> out;
  std::vector<SourceKind> kinds;
  if (regime_ != Regime::kVocal) kinds.push_back(SourceKind::kMixture);
  if (regime_ != Regime::kMixture) kinds.push_back(SourceKind::kVocalStem);
  for (const auto& [s, tracks] : tracks_) {
    for (const auto& tr : tracks) {
      for (auto k : kinds) {
        for (double o : tr.offsets) out.push_back({tr.id, k, o, s});
      }
    }
  }
  return out;
}

std::vector<PairBatch> validation_batches(const synth::CatalogManifest& manifest, const data::SplitSpec& split,
                                          Regime regime, int batch_pairs) {
  if (batch_pairs < 1) throw std::invalid_argument("batch_pairs must be >= 1");
  std::map<synth::SingerId, std::vector<SegmentRef>> by_singer;
  for (const auto& id : split.tracks_with(data::Role::kContrastiveVal)) {
    const auto& e = manifest.find(id);
    const auto it = split.fixed_val_segments.find(id);
    if (it == split.fixed_val_segments.end() || it->second.empty()) {
      throw std::invalid_argument("validation track " + id + " has no fixed segment");
    }
    by_singer[e.singer_id].push_back({id, SourceKind::kMixture, it->second.front(), e.singer_id});
  }
  std::vector<SegmentRef> all;
  int m = 0;
  for (auto& [s, refs] : by_singer) {
    if (refs.size() != 2) throw std::invalid_argument("validation singer " + std::to_string(s) + " needs 2 tracks");
    for (int j = 0; j < 2; ++j) {
      SourceKind k = SourceKind::kMixture;
      if (regime == Regime::kVocal) k = SourceKind::kVocalStem;
      if (regime == Regime::kHybrid) {
        const int pairing = m % 4;
        const bool vocal = j == 0 ? pairing < 2 : pairing % 2 == 0;
        k = vocal ? SourceKind::kVocalStem : SourceKind::kMixture;
      }
      refs[j].kind = k;
      all.push_back(refs[j]);
    }
    ++m;
  }
  // Near-equal batches so no batch degenerates to a single pair.
  std::vector<PairBatch> out;
  const int n_pairs = m;
  const int n_batches = (n_pairs + batch_pairs - 1) / batch_pairs;
  int start = 0;
  for (int b = 0; b < n_batches; ++b) {
    const int size = n_pairs / n_batches + (b < n_pairs % n_batches ? 1 : 0);
    PairBatch batch;
    batch.regime = regime;
    batch.inputs.assign(all.begin() + 2 * start, all.begin() + 2 * (start + size));
    out.push_back(std::move(batch));
    start += size;
  }
  if (out.empty()) throw std::invalid_argument("split has no contrastive validation pairs");
  return out;
}

}  // namespace singerlab::contrastive
