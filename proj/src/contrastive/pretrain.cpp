#include "singerlab/contrastive/pretrain.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "singerlab/common/error.hpp"
#include "singerlab/common/io.hpp"
#include "singerlab/contrastive/ntxent.hpp"

namespace singerlab::contrastive {

using nlohmann::json;

json encoder_config_to_json(const nn::EncoderConfig& c) {
  return {{"patch_h", c.patch_h}, {"patch_w", c.patch_w},     {"width", c.width},
          {"depth", c.depth},     {"heads", c.heads},         {"embed_dim", c.embed_dim},
          {"mlp_ratio", c.mlp_ratio}, {"dropout", c.dropout}};
}

nn::EncoderConfig encoder_config_from_json(const json& j) {
  nn::EncoderConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "patch_h") c.patch_h = v.get<int>();
    else if (k == "patch_w") c.patch_w = v.get<int>();
    else if (k == "width") c.width = v.get<int>();
    else if (k == "depth") c.depth = v.get<int>();
    else if (k == "heads") c.heads = v.get<int>();
    else if (k == "embed_dim") c.embed_dim = v.get<int>();
    else if (k == "mlp_ratio") c.mlp_ratio = v.get<int>();
    else if (k == "dropout") c.dropout = v.get<double>();
    else throw ConfigError("unknown encoder key '" + k + "'");
  }
  c.validate();
  return c;
}

json PretrainConfig::to_json() const {
  return {{"regime", to_string(regime)},
          {"preset", preset},
          {"encoder", encoder_config_to_json(encoder)},
          {"batch_pairs", batch_pairs},
          {"lr", lr},
          {"temperature", temperature},
          {"train_iters", train_iters},
          {"val_iters", val_iters},
          {"max_epochs", max_epochs},
          {"plateau",
           {{"decay_factor", plateau.decay_factor},
            {"patience_decay", plateau.patience_decay},
            {"patience_stop", plateau.patience_stop},
            {"min_delta", plateau.min_delta}}},
          {"seed", seed}};
}

PretrainConfig PretrainConfig::from_json(const json& j) {
  PretrainConfig c;
  if (j.contains("preset")) {
    c.preset = j.at("preset").get<std::string>();
    c.encoder = nn::EncoderConfig::preset(c.preset);
  }
  for (const auto& [k, v] : j.items()) {
    if (k == "regime") c.regime = regime_from_string(v.get<std::string>());
    else if (k == "preset") continue;
    else if (k == "encoder") c.encoder = encoder_config_from_json(v);
    else if (k == "batch_pairs") c.batch_pairs = v.get<int>();
    else if (k == "lr") c.lr = v.get<double>();
    else if (k == "temperature") c.temperature = v.get<double>();
    else if (k == "train_iters") c.train_iters = v.get<int>();
    else if (k == "val_iters") c.val_iters = v.get<int>();
    else if (k == "max_epochs") c.max_epochs = v.get<int>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "plateau") {
      for (const auto& [pk, pv] : v.items()) {
        if (pk == "decay_factor") c.plateau.decay_factor = pv.get<double>();
        else if (pk == "patience_decay") c.plateau.patience_decay = pv.get<int>();
        else if (pk == "patience_stop") c.plateau.patience_stop = pv.get<int>();
        else if (pk == "min_delta") c.plateau.min_delta = pv.get<double>();
        else throw ConfigError("unknown plateau key '" + pk + "'");
      }
    } else {
      throw ConfigError("unknown pretrain key '" + k + "'");
    }
  }
  if (c.batch_pairs < 1 || c.train_iters < 1 || c.val_iters < 1 || c.max_epochs < 0 || !(c.lr > 0) ||
      !(c.temperature > 0)) {
    throw ConfigError("pretrain config has a non-positive size, rate or temperature");
  }
  return c;
}

namespace {

nn::Matrix<float> patches_for(data::MelStore& store, const std::vector<SegmentRef>& refs,
                              const nn::EncoderConfig& cfg) {
  std::vector<const audio::MelSegment*> mels;
  mels.reserve(refs.size());
  for (const auto& r : refs) mels.push_back(&store.get(r.track_id, r.kind, r.offset_s));
  return nn::stack_patches(mels, cfg);
}

}  // namespace

nn::Matrix<float> embed_segments(const nn::Encoder<float>& encoder, const nn::ParamSet<float>& params,
                                 data::MelStore& store, const std::vector<SegmentRef>& refs, int chunk) {
  nn::Matrix<float> out(static_cast<Eigen::Index>(refs.size()), encoder.config().embed_dim);
  for (std::size_t start = 0; start < refs.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t n = std::min(refs.size() - start, static_cast<std::size_t>(chunk));
    const std::vector<SegmentRef> part(refs.begin() + start, refs.begin() + start + n);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) =
        encoder.forward(params, patches_for(store, part, encoder.config()), static_cast<int>(n), nullptr);
  }
  return out;
}

double validation_loss(const nn::Encoder<float>& encoder, const nn::ParamSet<float>& enc_params,
                       const nn::MlpHead<float>& projector, const nn::ParamSet<float>& proj_params,
                       data::MelStore& store, const std::vector<PairBatch>& batches, int val_iters,
                       double temperature) {
  double total = 0.0;
  const int nb = static_cast<int>(batches.size());
  for (int b = 0; b < nb; ++b) {
    const int visits = val_iters / nb + (b < val_iters % nb ? 1 : 0);
    if (visits == 0) continue;
    const auto emb = embed_segments(encoder, enc_params, store, batches[b].inputs);
    const auto z = projector.forward_infer(proj_params, emb);
    total += visits * static_cast<double>(nt_xent<float>(z, temperature, nullptr));
  }
  return total / val_iters;
}

PretrainResult pretrain(const PretrainConfig& config, data::MelStore& store, const data::SplitSpec& split,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  const nn::Encoder<float> encoder(config.encoder);
  const nn::MlpHead<float> projector(nn::HeadConfig::projector(config.encoder.embed_dim));
  const PairSampler sampler(store.manifest(), split, config.regime);
  const auto val = validation_batches(store.manifest(), split, config.regime, config.batch_pairs);

  PretrainResult r;
  r.encoder = encoder.init_params(derive_seed({config.seed, hash_string("encoder")}));
  r.projector = projector.init_params(derive_seed({config.seed, hash_string("projector")}));
  r.encoder_opt = nn::Adam<float>(r.encoder, nn::AdamConfig{config.lr});
  r.projector_opt = nn::Adam<float>(r.projector, nn::AdamConfig{config.lr});
  r.plateau = PlateauState::start(config.plateau, config.lr);
  Rng rng(derive_seed({config.seed, hash_string("pairs"), static_cast<std::uint64_t>(config.regime)}));

  r.untrained_val_loss =
      validation_loss(encoder, r.encoder, projector, r.projector, store, val, config.val_iters, config.temperature);

  auto enc_grad = r.encoder.zeros_like();
  auto proj_grad = r.projector.zeros_like();
  for (int epoch = 1;; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto good_encoder = r.encoder;
    const auto good_projector = r.projector;
    double train_sum = 0.0;
    bool diverged = false;
    for (int it = 0; it < config.train_iters; ++it) {
      const PairBatch batch = sampler.sample(config.batch_pairs, rng);
      const auto x = patches_for(store, batch.inputs, config.encoder);
      nn::EncoderCache<float> ec;
      const auto emb = encoder.forward(r.encoder, x, static_cast<int>(batch.inputs.size()), &ec);
      nn::HeadCache<float> hc;
      const auto z = projector.forward_train(r.projector, emb, &hc);
      nn::Matrix<float> dz;
      const float loss = nt_xent<float>(z, config.temperature, &dz);
      if (!std::isfinite(loss)) {
        diverged = true;
        break;
      }
      train_sum += loss;
      std::fill(enc_grad.data().begin(), enc_grad.data().end(), 0.0f);
      std::fill(proj_grad.data().begin(), proj_grad.data().end(), 0.0f);
      const auto demb = projector.backward(r.projector, hc, dz, proj_grad);
      encoder.backward(r.encoder, ec, demb, enc_grad);
      r.encoder_opt.step(r.encoder, enc_grad, r.plateau.lr);
      r.projector_opt.step(r.projector, proj_grad, r.plateau.lr);
    }
    if (diverged) {
      r.encoder = good_encoder;
      r.projector = good_projector;
      r.stop_reason = "diverged";
      log_warn("pretrain: non-finite loss in epoch " + std::to_string(epoch) + "; keeping epoch " +
               std::to_string(epoch - 1) + " parameters");
      break;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_sum / config.train_iters;
    rec.val_loss =
        validation_loss(encoder, r.encoder, projector, r.projector, store, val, config.val_iters, config.temperature);
    if (!std::isfinite(rec.val_loss)) {
      r.encoder = good_encoder;
      r.projector = good_projector;
      r.stop_reason = "diverged";
      break;
    }
    rec.lr = r.plateau.lr;
    const auto outcome = plateau_step(r.plateau, rec.val_loss);
    r.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream msg;
    msg << "pretrain[" << to_string(config.regime) << "] epoch " << epoch << " train " << rec.train_loss << " val "
        << rec.val_loss << " lr " << rec.lr << " (" << secs << " s)";
    log_info(msg.str());
    if (outcome.stop) {
      r.stop_reason = "plateau";
      break;
    }
    if (config.max_epochs > 0 && epoch >= config.max_epochs) {
      r.stop_reason = "max_epochs";
      break;
    }
  }
  return r;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& h : history) out << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.lr << '\n';
  return out.str();
}

nn::Checkpoint pretrain_checkpoint(const PretrainResult& r, const PretrainConfig& config) {
  nn::Checkpoint ck;
  ck.groups["encoder"] = r.encoder;
  ck.groups["projector"] = r.projector;
  auto with = [](const nn::ParamSet<float>& layout, const std::vector<float>& values) {
    auto p = layout.zeros_like();
    p.data().assign(values.begin(), values.end());
    return p;
  };
  ck.groups["adam.encoder.m"] = with(r.encoder, r.encoder_opt.m());
  ck.groups["adam.encoder.v"] = with(r.encoder, r.encoder_opt.v());
  ck.groups["adam.projector.m"] = with(r.projector, r.projector_opt.m());
  ck.groups["adam.projector.v"] = with(r.projector, r.projector_opt.v());
  json hist = json::array();
  for (const auto& h : r.history) hist.push_back({h.epoch, h.train_loss, h.val_loss, h.lr});
  ck.meta = {{"kind", "pretrain"},
             {"config", config.to_json()},
             {"adam_steps", r.encoder_opt.steps()},
             {"plateau", {{"best_val", r.plateau.best_val}, {"epochs_since_best", r.plateau.epochs_since_best},
                          {"lr", r.plateau.lr}}},
             {"stop_reason", r.stop_reason},
             {"untrained_val_loss", r.untrained_val_loss},
             {"history", hist}};
  return ck;
}

LoadedEncoder encoder_from_checkpoint(const nn::Checkpoint& ckpt) {
  if (!ckpt.meta.contains("config") || !ckpt.groups.contains("encoder")) {
    throw ConfigError("checkpoint is not a pretrain checkpoint");
  }
  LoadedEncoder out;
  const auto cfg = PretrainConfig::from_json(ckpt.meta.at("config"));
  out.config = cfg.encoder;
  out.regime = cfg.regime;
  const nn::Encoder<float> enc(out.config);
  out.params = enc.make_params();
  nn::assign_group(out.params, ckpt.groups.at("encoder"), "encoder");
  return out;
}

}  // namespace singerlab::contrastive
