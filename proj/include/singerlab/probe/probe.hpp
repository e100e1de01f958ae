#pragma once

#include <map>
#include <string>
#include <vector>

#include "singerlab/contrastive/plateau.hpp"
#include "singerlab/nn/adam.hpp"
#include "singerlab/nn/mlp_head.hpp"
#include "singerlab/synth/catalog.hpp"

namespace singerlab::probe {

using synth::SingerId;

// Bijection between singer ids and class indices (sorted by singer id).
class ClassMap {
 public:
  explicit ClassMap(std::vector<SingerId> singers);
  int index_of(SingerId s) const;
  bool contains(SingerId s) const { return index_.contains(s); }
  SingerId singer(int index) const { return singers_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(singers_.size()); }
  const std::vector<SingerId>& singers() const { return singers_; }

 private:
  std::vector<SingerId> singers_;
  std::map<SingerId, int> index_;
};

// Labelled embeddings: one row per segment.
struct LabelledSet {
  nn::Matrix<float> x;
  std::vector<int> y;
};

struct ProbeConfig {
  int batch_size = 100;
  double lr = 0.01;
  int train_iters = 32;
  int val_iters = 32;
  int max_epochs = 0;  // 0: until the plateau rule stops
  contrastive::PlateauConfig plateau = contrastive::PlateauConfig::probe();
};

struct ProbeEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;
};

struct ProbeHead {
  nn::HeadConfig config;
  nn::ParamSet<float> params;
  std::vector<ProbeEpoch> history;
  std::string stop_reason;

  // Softmax probabilities in inference mode, one row per input row.
  nn::Matrix<float> predict_proba(const nn::Matrix<float>& x) const;
};

// Mean cross entropy and accuracy per segment, inference mode.
std::pair<double, double> evaluate_segments(const ProbeHead& head, const LabelledSet& set);

// Cross-entropy training of a projector-shaped head on frozen embeddings.
// Batches of batch_size rows are drawn from a seeded reshuffle of train;
// validation scores every row of val once per epoch (identical across the
// val_iters iterations, since the head is in inference mode).
ProbeHead train_probe(const LabelledSet& train, const LabelledSet& val, int n_classes, const ProbeConfig& config,
                      std::uint64_t seed);

struct TrackPrediction {
  std::string track_id;
  std::vector<int> votes;         // per class
  std::vector<double> prob_sums;  // per class
  std::vector<int> ranking;       // classes, best first
  int top1 = -1;
  bool unclassifiable = false;
};

// Majority vote over per-segment argmax; ties broken by summed
// probability, then by lower class index. Zero rows -> unclassifiable.
TrackPrediction vote_track(const std::string& track_id, const nn::Matrix<float>& segment_probs, int n_classes);

// Fraction of classifiable tracks whose truth is in ranking[0, k).
// Unclassifiable tracks are excluded from the denominator. Returns 0 when
// nothing is classifiable.
double topk_accuracy(const std::vector<TrackPrediction>& predictions, const std::vector<int>& truths, int k);
std::size_t unclassifiable_count(const std::vector<TrackPrediction>& predictions);

// CSV: track_id,true_singer,rank1..rank5,votes,unclassifiable.
std::string predictions_csv(const std::vector<TrackPrediction>& predictions, const std::vector<int>& truths,
                            const ClassMap& classes);

}  // namespace singerlab::probe
