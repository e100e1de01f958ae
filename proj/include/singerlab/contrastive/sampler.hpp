#pragma once

#include <map>
#include <string>
#include <vector>

#include "singerlab/audio/audio_clip.hpp"
#include "singerlab/common/rng.hpp"
#include "singerlab/data/splits.hpp"

namespace singerlab::contrastive {

enum class Regime { kMixture, kVocal, kHybrid };
const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

// Input domain for identification / analysis with an encoder trained
// under this regime: vocal stem for Vocal, mixture otherwise.
audio::SourceKind eval_kind(Regime r);

struct SegmentRef {
  std::string track_id;
  audio::SourceKind kind = audio::SourceKind::kMixture;
  double offset_s = 0.0;
  synth::SingerId singer_id = 0;
};

// 2B refs; (2m, 2m+1) is the m-th positive pair.
struct PairBatch {
  std::vector<SegmentRef> inputs;
  Regime regime = Regime::kMixture;
  int pairs() const { return static_cast<int>(inputs.size() / 2); }
};

// Draws positive pairs from the contrastive_train tracks of a split.
// Segment offsets follow the 3 s grid of windows that are at least half
// vocal.
class PairSampler {
 public:
  PairSampler(const synth::CatalogManifest& manifest, const data::SplitSpec& split, Regime regime);

  // B singers without replacement (with replacement when fewer than B
  // are eligible); two distinct tracks and one random segment each.
  PairBatch sample(int batch_pairs, Rng& rng) const;

  std::size_t singer_count() const { return singers_.size(); }
  // Every segment a training batch can contain.
  std::vector<SegmentRef> all_segments() const;

 private:
  struct Track {
    std::string id;
    std::vector<double> offsets;
  };
  Regime regime_;
  std::vector<synth::SingerId> singers_;
  std::map<synth::SingerId, std::vector<Track>> tracks_;
};

// Fixed validation pairs: each contrastive_val singer's two tracks at their
// fixed offsets. Under hybrid, pair m uses pairing m mod 4 of
// (vocal,vocal), (vocal,mixture), (mixture,vocal), (mixture,mixture).
std::vector<PairBatch> validation_batches(const synth::CatalogManifest& manifest, const data::SplitSpec& split,
                                          Regime regime, int batch_pairs);

}  // namespace singerlab::contrastive
