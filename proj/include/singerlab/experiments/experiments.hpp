#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "singerlab/contrastive/pretrain.hpp"
#include "singerlab/probe/probe.hpp"

namespace singerlab::experiments {

using contrastive::Regime;
using contrastive::SegmentRef;

inline constexpr double kTrainSegmentHop = 3.0;
inline constexpr double kInferenceSegmentHop = 6.0;
inline constexpr int kDefaultMinGenreTracks = 10;

// Memoised inference-mode embeddings keyed by (track, kind, offset).
class EmbeddingBank {
 public:
  EmbeddingBank(const nn::EncoderConfig& config, nn::ParamSet<float> params, data::MelStore& store);

  // Computes what is missing (in chunks), then returns rows in ref order.
  nn::Matrix<float> get(const std::vector<SegmentRef>& refs);
  const nn::ParamSet<float>& params() const { return params_; }
  data::MelStore& store() { return *store_; }
  std::size_t size() const { return rows_.size(); }

 private:
  using Key = std::tuple<std::string, int, long long>;
  nn::Encoder<float> encoder_;
  nn::ParamSet<float> params_;
  data::MelStore* store_;
  std::map<Key, nn::RowVector<float>> rows_;
};

struct GenreScore {
  double top1 = 0.0;
  double top5 = 0.0;
  int n = 0;
};

struct BucketScore {
  double top1 = 0.0;
  int n = 0;
};

struct RunResult {
  std::uint64_t run_seed = 0;
  std::string protocol;  // "closed_set" or "cloned"
  int n_classes = 0;
  Regime regime = Regime::kMixture;
  double top1 = 0.0;
  double top5 = 0.0;
  int n_tracks = 0;
  int n_unclassifiable = 0;
  std::map<std::string, GenreScore> per_genre;
  std::map<std::string, BucketScore> per_bucket;
  std::map<std::string, double> cosine_profile;
  // Cloned protocol: the same probe's accuracy on the real test tracks.
  std::optional<double> real_top1;
  std::optional<double> real_top5;
  int probe_epochs = 0;

  nlohmann::json to_json() const;
  static RunResult from_json(const nlohmann::json& j);
};

struct RunOutput {
  RunResult result;
  std::string predictions_csv;
};

// "5-9", "10-19", "20+"; nullopt below 5 training tracks.
std::optional<std::string> train_count_bucket(int n_train_tracks);

struct Context {
  const synth::CatalogManifest* manifest = nullptr;
  const data::SplitSpec* split = nullptr;  // identification split
  Regime regime = Regime::kMixture;
  EmbeddingBank* bank = nullptr;
  probe::ProbeConfig probe;
};

std::vector<synth::SingerId> id_singers(const data::SplitSpec& split, const synth::CatalogManifest& manifest);
std::set<synth::SingerId> clone_sources(const data::SplitSpec& split, const synth::CatalogManifest& manifest);

// Segment refs of a track in the given domain: training tracks on the 3 s
// grid, inference tracks on the 6 s hop, validation tracks at their fixed
// offsets.
std::vector<SegmentRef> training_segments(const synth::CatalogEntry& e, audio::SourceKind kind);
std::vector<SegmentRef> inference_segments(const synth::CatalogEntry& e, audio::SourceKind kind);

// id_train tracks of the class set: what a probe trains on.
std::vector<std::string> probe_training_tracks(const Context& ctx, const probe::ClassMap& classes);

// A trained probe for one run: class set and head.
struct TrainedRun {
  std::uint64_t seed = 0;
  std::string protocol;  // "closed_set" or "cloned"
  int n_classes = 0;
  std::vector<synth::SingerId> classes;
  probe::ProbeHead head;
};

TrainedRun train_run(Context& ctx, int n_classes, std::uint64_t seed, bool cloned);
RunOutput score_run(Context& ctx, const TrainedRun& run);

nn::Checkpoint probe_checkpoint(const TrainedRun& run, Regime regime);
TrainedRun probe_from_checkpoint(const nn::Checkpoint& ckpt);

// Per run: sample n_classes singers, train a probe on their id_train
// segments, vote on their id_test tracks. Inputs are in the regime's
// evaluation domain.
std::vector<RunOutput> run_identification(Context& ctx, int n_classes, const std::vector<std::uint64_t>& seeds);

// Per run: class subset forced to contain every clone source; probe trained
// on real tracks only; evaluated on cloned_eval tracks against the clone
// source. Also reports the same probe on the real test tracks.
std::vector<RunOutput> run_cloned_eval(Context& ctx, int n_classes, const std::vector<std::uint64_t>& seeds);

// Keys: test/other, test/val, test/vocal, test/instru, test/test. Test,
// validation and other-singer tracks are embedded in the regime's
// evaluation domain (vocal stem for vocal, mixture otherwise); the vocal and
// instrumental references use the stems at the test offsets; test/other draws one random
// other-singer test track per test track. Each reference set is averaged
// over all cross pairs per track, then over tracks; a track without pairs
// for a set is skipped for that set.
std::map<std::string, double> cosine_reference_analysis(const synth::CatalogManifest& manifest,
                                                        const data::SplitSpec& split, EmbeddingBank& bank,
                                                        Regime regime, std::uint64_t seed);

double cosine(const nn::RowVector<float>& a, const nn::RowVector<float>& b);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n = 0;
};
Summary summarize(const std::vector<double>& values);

// Genre top-5 and bucket top-1 tables across runs, as CSV and SVG box
// plots, written into out_dir. Genres with fewer than min_genre_tracks
// test tracks (per run) are omitted. Throws on an empty run set.
struct BreakdownFiles {
  std::string genre_csv;
  std::string bucket_csv;
  std::string genre_svg;
  std::string bucket_svg;
  std::vector<std::string> omitted_genres;
};
BreakdownFiles breakdown_reports(const std::vector<RunResult>& runs, int min_genre_tracks);
void write_breakdown(const BreakdownFiles& files, const std::filesystem::path& out_dir);

// One row per run plus mean/std rows.
std::string aggregate_csv(const std::vector<RunResult>& runs);

}  // namespace singerlab::experiments
