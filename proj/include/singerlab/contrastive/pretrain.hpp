#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "singerlab/contrastive/ntxent.hpp"
#include "singerlab/contrastive/plateau.hpp"
#include "singerlab/contrastive/sampler.hpp"
#include "singerlab/data/mel_store.hpp"
#include "singerlab/nn/adam.hpp"
#include "singerlab/nn/checkpoint.hpp"
#include "singerlab/nn/encoder.hpp"
#include "singerlab/nn/mlp_head.hpp"

namespace singerlab::contrastive {

struct PretrainConfig {
  Regime regime = Regime::kMixture;
  std::string preset = "desk";
  nn::EncoderConfig encoder = nn::EncoderConfig::desk();
  int batch_pairs = 128;
  double lr = 1e-4;
  double temperature = kDefaultTemperature;
  int train_iters = 32;
  int val_iters = 32;
  int max_epochs = 0;  // 0: run until the plateau rule stops
  PlateauConfig plateau = PlateauConfig::contrastive();
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  // Unknown keys are rejected.
  static PretrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct PretrainResult {
  nn::ParamSet<float> encoder;
  nn::ParamSet<float> projector;
  nn::Adam<float> encoder_opt;
  nn::Adam<float> projector_opt;
  PlateauState plateau;
  std::vector<EpochRecord> history;
  double untrained_val_loss = 0.0;
  std::string stop_reason;  // "plateau", "max_epochs" or "diverged"
};

// Embeds segment refs in inference mode, in chunks.
nn::Matrix<float> embed_segments(const nn::Encoder<float>& encoder, const nn::ParamSet<float>& params,
                                 data::MelStore& store, const std::vector<SegmentRef>& refs, int chunk = 32);

// Mean NT-Xent over the fixed validation batches, projector in inference
// mode. The val_iters iterations cycle through the batches; each distinct
// batch is evaluated once and weighted by how often the cycle visits it.
double validation_loss(const nn::Encoder<float>& encoder, const nn::ParamSet<float>& enc_params,
                       const nn::MlpHead<float>& projector, const nn::ParamSet<float>& proj_params,
                       data::MelStore& store, const std::vector<PairBatch>& batches, int val_iters,
                       double temperature);

// Per epoch: train_iters steps of Adam on the mean NT-Xent, then the
// validation loss and one plateau step. A non-finite training loss stops
// the run with the parameters of the last completed epoch.
PretrainResult pretrain(const PretrainConfig& config, data::MelStore& store, const data::SplitSpec& split,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

std::string history_csv(const std::vector<EpochRecord>& history);

nn::Checkpoint pretrain_checkpoint(const PretrainResult& result, const PretrainConfig& config);
// Encoder part of a pretrain checkpoint; validates it against the
// configuration stored in the checkpoint.
struct LoadedEncoder {
  nn::EncoderConfig config;
  Regime regime = Regime::kMixture;
  nn::ParamSet<float> params;
};
LoadedEncoder encoder_from_checkpoint(const nn::Checkpoint& ckpt);

nlohmann::json encoder_config_to_json(const nn::EncoderConfig& c);
nn::EncoderConfig encoder_config_from_json(const nlohmann::json& j);

}  // namespace singerlab::contrastive
