#include "singerlab/probe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "singerlab/common/io.hpp"
#include "singerlab/common/rng.hpp"

namespace singerlab::probe {

ClassMap::ClassMap(std::vector<SingerId> singers) : singers_(std::move(singers)) {
  std::sort(singers_.begin(), singers_.end());
  singers_.erase(std::unique(singers_.begin(), singers_.end()), singers_.end());
  if (singers_.size() < 2) throw std::invalid_argument("need at least 2 classes");
  for (std::size_t i = 0; i < singers_.size(); ++i) index_[singers_[i]] = static_cast<int>(i);
}

int ClassMap::index_of(SingerId s) const {
  const auto it = index_.find(s);
  if (it == index_.end()) throw std::out_of_range("singer " + std::to_string(s) + " is not a class");
  return it->second;
}

namespace {

void softmax_inplace(nn::Matrix<float>& z) { nn::softmax_rows<float>(z); }

// Mean cross entropy of logits; optionally the gradient w.r.t. logits.
double cross_entropy(const nn::Matrix<float>& logits, const std::vector<int>& y, const std::vector<std::size_t>& rows,
                     nn::Matrix<float>* grad) {
  nn::Matrix<float> p = logits;
  softmax_inplace(p);
  double loss = 0.0;
  const auto n = static_cast<float>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int c = y[rows[i]];
    loss -= std::log(std::max(static_cast<double>(p(static_cast<Eigen::Index>(i), c)), 1e-30));
  }
  if (grad) {
    *grad = p;
    for (std::size_t i = 0; i < rows.size(); ++i) (*grad)(static_cast<Eigen::Index>(i), y[rows[i]]) -= 1.0f;
    *grad /= n;
  }
  return loss / static_cast<double>(rows.size());
}

}  // namespace

nn::Matrix<float> ProbeHead::predict_proba(const nn::Matrix<float>& x) const {
  const nn::MlpHead<float> head(config);
  nn::Matrix<float> z = head.forward_infer(params, x);
  softmax_inplace(z);
  return z;
}

std::pair<double, double> evaluate_segments(const ProbeHead& head, const LabelledSet& set) {
  if (set.x.rows() == 0) throw std::invalid_argument("empty evaluation set");
  const nn::MlpHead<float> mlp(head.config);
  const nn::Matrix<float> logits = mlp.forward_infer(head.params, set.x);
  std::vector<std::size_t> rows(set.y.size());
  std::iota(rows.begin(), rows.end(), 0);
  const double loss = cross_entropy(logits, set.y, rows, nullptr);
  int correct = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index arg;
    logits.row(r).maxCoeff(&arg);
    correct += static_cast<int>(arg) == set.y[static_cast<std::size_t>(r)];
  }
  return {loss, static_cast<double>(correct) / static_cast<double>(logits.rows())};
}

ProbeHead train_probe(const LabelledSet& train, const LabelledSet& val, int n_classes, const ProbeConfig& config,
                      std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("n_classes must be >= 2");
  if (train.x.rows() < 2 || static_cast<std::size_t>(train.x.rows()) != train.y.size()) {
    throw std::invalid_argument("training set needs at least 2 labelled rows");
  }
  if (val.x.rows() < 1 || static_cast<std::size_t>(val.x.rows()) != val.y.size()) {
    throw std::invalid_argument("validation set needs labelled rows");
  }
  for (int c : train.y) {
    if (c < 0 || c >= n_classes) throw std::invalid_argument("training label out of range");
  }
  ProbeHead head;
  head.config = nn::HeadConfig::probe(static_cast<int>(train.x.cols()), n_classes);
  const nn::MlpHead<float> mlp(head.config);
  head.params = mlp.init_params(derive_seed({seed, hash_string("probe-init")}));
  nn::Adam<float> opt(head.params, nn::AdamConfig{config.lr});
  auto state = contrastive::PlateauState::start(config.plateau, config.lr);
  Rng rng(derive_seed({seed, hash_string("probe-batches")}));

  const std::size_t n = train.y.size();
  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t cursor = 0;
  auto grads = head.params.zeros_like();

  for (int epoch = 1;; ++epoch) {
    double train_sum = 0.0;
    for (int it = 0; it < config.train_iters; ++it) {
      std::vector<std::size_t> rows;
      rows.reserve(bs);
      while (rows.size() < bs) {
        if (cursor == n) {
          rng.shuffle(order);
          cursor = 0;
        }
        rows.push_back(order[cursor++]);
      }
      nn::Matrix<float> xb(static_cast<Eigen::Index>(bs), train.x.cols());
      for (std::size_t i = 0; i < bs; ++i) xb.row(static_cast<Eigen::Index>(i)) = train.x.row(static_cast<Eigen::Index>(rows[i]));
      nn::HeadCache<float> cache;
      const auto logits = mlp.forward_train(head.params, xb, &cache);
      nn::Matrix<float> dlogits;
      train_sum += cross_entropy(logits, train.y, rows, &dlogits);
      std::fill(grads.data().begin(), grads.data().end(), 0.0f);
      mlp.backward(head.params, cache, dlogits, grads);
      opt.step(head.params, grads, state.lr);
    }
    const auto [val_loss, val_acc] = evaluate_segments(head, val);
    ProbeEpoch rec{epoch, train_sum / config.train_iters, val_loss, val_acc, state.lr};
    if (!std::isfinite(val_loss) || !std::isfinite(rec.train_loss)) {
      throw std::runtime_error("probe training diverged");
    }
    head.history.push_back(rec);
    const auto out = contrastive::plateau_step(state, val_loss);
    if (out.stop) {
      head.stop_reason = "plateau";
      break;
    }
    if (config.max_epochs > 0 && epoch >= config.max_epochs) {
      head.stop_reason = "max_epochs";
      break;
    }
  }
  return head;
}

TrackPrediction vote_track(const std::string& track_id, const nn::Matrix<float>& probs, int n_classes) {
  TrackPrediction p;
  p.track_id = track_id;
  p.votes.assign(static_cast<std::size_t>(n_classes), 0);
  p.prob_sums.assign(static_cast<std::size_t>(n_classes), 0.0);
  if (probs.rows() == 0) {
    p.unclassifiable = true;
    return p;
  }
  if (probs.cols() != n_classes) throw std::invalid_argument("probability matrix has the wrong width");
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(r, c) > probs(r, arg)) arg = c;
    }
    ++p.votes[static_cast<std::size_t>(arg)];
    for (int c = 0; c < n_classes; ++c) p.prob_sums[static_cast<std::size_t>(c)] += probs(r, c);
  }
  p.ranking.resize(static_cast<std::size_t>(n_classes));
  std::iota(p.ranking.begin(), p.ranking.end(), 0);
  std::stable_sort(p.ranking.begin(), p.ranking.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (p.votes[ua] != p.votes[ub]) return p.votes[ua] > p.votes[ub];
    if (p.prob_sums[ua] != p.prob_sums[ub]) return p.prob_sums[ua] > p.prob_sums[ub];
    return a < b;
  });
  p.top1 = p.ranking.front();
  return p;
}

double topk_accuracy(const std::vector<TrackPrediction>& preds, const std::vector<int>& truths, int k) {
  if (preds.size() != truths.size()) throw std::invalid_argument("predictions and truths differ in length");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::size_t total = 0, hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].unclassifiable) continue;
    ++total;
    const auto& r = preds[i].ranking;
    const auto end = r.begin() + std::min<std::size_t>(static_cast<std::size_t>(k), r.size());
    hits += std::find(r.begin(), end, truths[i]) != end;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::size_t unclassifiable_count(const std::vector<TrackPrediction>& preds) {
  return static_cast<std::size_t>(
      std::count_if(preds.begin(), preds.end(), [](const TrackPrediction& p) { return p.unclassifiable; }));
}

std::string predictions_csv(const std::vector<TrackPrediction>& preds, const std::vector<int>& truths,
                            const ClassMap& classes) {
  std::ostringstream out;
  out << "track_id,true_singer,rank1,rank2,rank3,rank4,rank5,votes,unclassifiable\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    out << p.track_id << ',' << classes.singer(truths[i]);
    for (int r = 0; r < 5; ++r) {
      out << ',';
      if (static_cast<std::size_t>(r) < p.ranking.size()) out << classes.singer(p.ranking[static_cast<std::size_t>(r)]);
    }
    out << ',';
    bool first = true;
    for (std::size_t c = 0; c < p.votes.size(); ++c) {
      if (p.votes[c] == 0) continue;
      out << (first ? "" : ";") << classes.singer(static_cast<int>(c)) << ':' << p.votes[c];
      first = false;
    }
    out << ',' << (p.unclassifiable ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace singerlab::probe
