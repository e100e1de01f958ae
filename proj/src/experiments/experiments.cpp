#include "singerlab/experiments/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "singerlab/common/io.hpp"
#include "singerlab/common/rng.hpp"

namespace singerlab::experiments {

using nlohmann::json;
using probe::ClassMap;
using synth::CatalogEntry;
using synth::SingerId;

EmbeddingBank::EmbeddingBank(const nn::EncoderConfig& config, nn::ParamSet<float> params, data::MelStore& store)
    : encoder_(config), params_(std::move(params)), store_(&store) {
  encoder_.check_params(params_);
}

nn::Matrix<float> EmbeddingBank::get(const std::vector<SegmentRef>& refs) {
  auto key_of = [](const SegmentRef& r) {
    return Key{r.track_id, static_cast<int>(r.kind), std::llround(r.offset_s * 1000.0)};
  };
  std::vector<SegmentRef> missing;
  std::set<Key> queued;
  for (const auto& r : refs) {
    const Key k = key_of(r);
    if (!rows_.contains(k) && queued.insert(k).second) missing.push_back(r);
  }
  if (!missing.empty()) {
    const auto emb = contrastive::embed_segments(encoder_, params_, *store_, missing);
    for (std::size_t i = 0; i < missing.size(); ++i) rows_[key_of(missing[i])] = emb.row(static_cast<Eigen::Index>(i));
  }
  nn::Matrix<float> out(static_cast<Eigen::Index>(refs.size()), encoder_.config().embed_dim);
  for (std::size_t i = 0; i < refs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows_.at(key_of(refs[i]));
  return out;
}

json RunResult::to_json() const {
  json j = {{"run_seed", run_seed},   {"protocol", protocol}, {"n_classes", n_classes},
            {"regime", contrastive::to_string(regime)},       {"top1", top1},
            {"top5", top5},           {"n_tracks", n_tracks}, {"n_unclassifiable", n_unclassifiable},
            {"probe_epochs", probe_epochs}};
  json g = json::object();
  for (const auto& [k, v] : per_genre) g[k] = {{"top1", v.top1}, {"top5", v.top5}, {"n", v.n}};
  j["per_genre"] = g;
  json b = json::object();
  for (const auto& [k, v] : per_bucket) b[k] = {{"top1", v.top1}, {"n", v.n}};
  j["per_bucket"] = b;
  j["cosine_profile"] = cosine_profile;
  if (real_top1) j["real_top1"] = *real_top1;
  if (real_top5) j["real_top5"] = *real_top5;
  return j;
}

RunResult RunResult::from_json(const json& j) {
  RunResult r;
  r.run_seed = j.at("run_seed").get<std::uint64_t>();
  r.protocol = j.at("protocol").get<std::string>();
  r.n_classes = j.at("n_classes").get<int>();
  r.regime = contrastive::regime_from_string(j.at("regime").get<std::string>());
  r.top1 = j.at("top1").get<double>();
  r.top5 = j.at("top5").get<double>();
  r.n_tracks = j.at("n_tracks").get<int>();
  r.n_unclassifiable = j.at("n_unclassifiable").get<int>();
  r.probe_epochs = j.value("probe_epochs", 0);
  for (const auto& [k, v] : j.at("per_genre").items()) {
    r.per_genre[k] = {v.at("top1").get<double>(), v.at("top5").get<double>(), v.at("n").get<int>()};
  }
  for (const auto& [k, v] : j.at("per_bucket").items()) r.per_bucket[k] = {v.at("top1").get<double>(), v.at("n").get<int>()};
  r.cosine_profile = j.at("cosine_profile").get<std::map<std::string, double>>();
  if (j.contains("real_top1")) r.real_top1 = j.at("real_top1").get<double>();
  if (j.contains("real_top5")) r.real_top5 = j.at("real_top5").get<double>();
  return r;
}

std::optional<std::string> train_count_bucket(int n) {
  if (n >= 20) return "20+";
  if (n >= 10) return "10-19";
  if (n >= 5) return "5-9";
  return std::nullopt;
}

std::vector<SingerId> id_singers(const data::SplitSpec& split, const synth::CatalogManifest& manifest) {
  std::set<SingerId> s;
  for (const auto& id : split.tracks_with(data::Role::kIdTest)) s.insert(manifest.find(id).singer_id);
  return {s.begin(), s.end()};
}

std::set<SingerId> clone_sources(const data::SplitSpec& split, const synth::CatalogManifest& manifest) {
  std::set<SingerId> s;
  for (const auto& id : split.tracks_with(data::Role::kClonedEval)) {
    const auto& e = manifest.find(id);
    if (e.clone_source_singer) s.insert(*e.clone_source_singer);
  }
  return s;
}

namespace {

std::vector<SegmentRef> refs_at(const CatalogEntry& e, audio::SourceKind kind, const std::vector<double>& offsets) {
  std::vector<SegmentRef> out;
  for (double o : offsets) out.push_back({e.track_id, kind, o, e.singer_id});
  return out;
}

struct Prepared {
  probe::LabelledSet train;
  probe::LabelledSet val;
  std::map<SingerId, int> train_tracks;
};

}  // namespace

std::vector<std::string> probe_training_tracks(const Context& ctx, const ClassMap& classes) {
  std::vector<std::string> out;
  for (const auto& id : ctx.split->tracks_with(data::Role::kIdTrain)) {
    const auto& e = ctx.manifest->find(id);
    if (classes.contains(e.singer_id) && !e.is_clone) out.push_back(id);
  }
  return out;
}

namespace {

Prepared prepare_probe_data(Context& ctx, const ClassMap& classes) {
  const auto kind = contrastive::eval_kind(ctx.regime);
  Prepared p;
  std::vector<SegmentRef> train_refs, val_refs;
  std::vector<int> train_y, val_y;
  for (const auto& id : probe_training_tracks(ctx, classes)) {
    const auto& e = ctx.manifest->find(id);
    ++p.train_tracks[e.singer_id];
    for (auto& r : training_segments(e, kind)) {
      train_refs.push_back(std::move(r));
      train_y.push_back(classes.index_of(e.singer_id));
    }
  }
  for (const auto& id : ctx.split->tracks_with(data::Role::kIdVal)) {
    const auto& e = ctx.manifest->find(id);
    if (!classes.contains(e.singer_id)) continue;
    for (auto& r : refs_at(e, kind, ctx.split->fixed_val_segments.at(id))) {
      val_refs.push_back(std::move(r));
      val_y.push_back(classes.index_of(e.singer_id));
    }
  }
  if (train_refs.empty() || val_refs.empty()) throw std::invalid_argument("class subset has no training or validation segments");
  p.train = {ctx.bank->get(train_refs), std::move(train_y)};
  p.val = {ctx.bank->get(val_refs), std::move(val_y)};
  return p;
}

struct Scored {
  std::vector<probe::TrackPrediction> preds;
  std::vector<int> truths;
  std::vector<const CatalogEntry*> entries;
};

Scored score_tracks(Context& ctx, const probe::ProbeHead& head, const ClassMap& classes,
                    const std::vector<std::string>& track_ids, bool clone_truth) {
  const auto kind = contrastive::eval_kind(ctx.regime);
  Scored s;
  for (const auto& id : track_ids) {
    const auto& e = ctx.manifest->find(id);
    const SingerId truth = clone_truth ? e.clone_source_singer.value() : e.singer_id;
    if (!classes.contains(truth)) continue;
    const auto refs = inference_segments(e, kind);
    nn::Matrix<float> probs(0, classes.size());
    if (!refs.empty()) probs = head.predict_proba(ctx.bank->get(refs));
    s.preds.push_back(probe::vote_track(id, probs, classes.size()));
    s.truths.push_back(classes.index_of(truth));
    s.entries.push_back(&e);
  }
  return s;
}

void fill_scores(RunResult& r, const Scored& s, const std::map<SingerId, int>& train_tracks, const ClassMap& classes) {
  r.top1 = probe::topk_accuracy(s.preds, s.truths, 1);
  r.top5 = probe::topk_accuracy(s.preds, s.truths, 5);
  r.n_tracks = static_cast<int>(s.preds.size());
  r.n_unclassifiable = static_cast<int>(probe::unclassifiable_count(s.preds));
  if (r.n_unclassifiable > 0) {
    log_warn(std::to_string(r.n_unclassifiable) + " unclassifiable track(s) excluded from accuracy");
  }
  std::map<std::string, std::pair<std::vector<probe::TrackPrediction>, std::vector<int>>> by_genre, by_bucket;
  for (std::size_t i = 0; i < s.preds.size(); ++i) {
    auto& g = by_genre[synth::to_string(s.entries[i]->genre)];
    g.first.push_back(s.preds[i]);
    g.second.push_back(s.truths[i]);
    const auto it = train_tracks.find(classes.singer(s.truths[i]));
    const int n_train = it == train_tracks.end() ? 0 : it->second;
    if (const auto b = train_count_bucket(n_train)) {
      auto& bb = by_bucket[*b];
      bb.first.push_back(s.preds[i]);
      bb.second.push_back(s.truths[i]);
    }
  }
  for (const auto& [g, v] : by_genre) {
    r.per_genre[g] = {probe::topk_accuracy(v.first, v.second, 1), probe::topk_accuracy(v.first, v.second, 5),
                      static_cast<int>(v.first.size() - probe::unclassifiable_count(v.first))};
  }
  for (const auto& [b, v] : by_bucket) {
    r.per_bucket[b] = {probe::topk_accuracy(v.first, v.second, 1),
                       static_cast<int>(v.first.size() - probe::unclassifiable_count(v.first))};
  }
}

void check_protocol_args(Context& ctx, int n_classes, bool cloned) {
  const auto singers = id_singers(*ctx.split, *ctx.manifest);
  if (cloned && clone_sources(*ctx.split, *ctx.manifest).empty()) {
    throw std::invalid_argument("split has no cloned_eval tracks");
  }
  if (n_classes < 2 || static_cast<std::size_t>(n_classes) > singers.size()) {
    throw std::invalid_argument("n_classes " + std::to_string(n_classes) + " not in [2, " +
                                std::to_string(singers.size()) + "]");
  }
}

std::vector<RunOutput> run_protocol(Context& ctx, int n_classes, const std::vector<std::uint64_t>& seeds, bool cloned) {
  if (seeds.empty()) throw std::invalid_argument("no run seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("run seeds must be distinct");
  }
  check_protocol_args(ctx, n_classes, cloned);
  std::vector<RunOutput> out;
  for (const auto seed : seeds) out.push_back(score_run(ctx, train_run(ctx, n_classes, seed, cloned)));
  return out;
}

}  // namespace

std::vector<SegmentRef> training_segments(const CatalogEntry& e, audio::SourceKind kind) {
  return refs_at(e, kind, data::vocal_offsets(e, kTrainSegmentHop));
}

std::vector<SegmentRef> inference_segments(const CatalogEntry& e, audio::SourceKind kind) {
  return refs_at(e, kind, data::vocal_offsets(e, kInferenceSegmentHop));
}

TrainedRun train_run(Context& ctx, int n_classes, std::uint64_t seed, bool cloned) {
  check_protocol_args(ctx, n_classes, cloned);
  const auto must = cloned ? clone_sources(*ctx.split, *ctx.manifest) : std::set<SingerId>{};
  TrainedRun run;
  run.seed = seed;
  run.protocol = cloned ? "cloned" : "closed_set";
  run.n_classes = n_classes;
  run.classes = data::sample_class_subset(id_singers(*ctx.split, *ctx.manifest), static_cast<std::size_t>(n_classes),
                                          must, seed);
  const ClassMap classes(run.classes);
  const Prepared data = prepare_probe_data(ctx, classes);
  run.head = probe::train_probe(data.train, data.val, classes.size(), ctx.probe, seed);
  return run;
}

RunOutput score_run(Context& ctx, const TrainedRun& run) {
  const ClassMap classes(run.classes);
  const bool cloned = run.protocol == "cloned";
  std::map<SingerId, int> train_tracks;
  for (const auto& id : probe_training_tracks(ctx, classes)) ++train_tracks[ctx.manifest->find(id).singer_id];
  RunOutput ro;
  RunResult& r = ro.result;
  r.run_seed = run.seed;
  r.protocol = run.protocol;
  r.n_classes = run.n_classes;
  r.regime = ctx.regime;
  r.probe_epochs = static_cast<int>(run.head.history.size());
  const auto test_ids = ctx.split->tracks_with(data::Role::kIdTest);
  if (cloned) {
    const Scored clones = score_tracks(ctx, run.head, classes, ctx.split->tracks_with(data::Role::kClonedEval), true);
    fill_scores(r, clones, train_tracks, classes);
    const Scored real = score_tracks(ctx, run.head, classes, test_ids, false);
    r.real_top1 = probe::topk_accuracy(real.preds, real.truths, 1);
    r.real_top5 = probe::topk_accuracy(real.preds, real.truths, 5);
    ro.predictions_csv = probe::predictions_csv(clones.preds, clones.truths, classes);
  } else {
    const Scored real = score_tracks(ctx, run.head, classes, test_ids, false);
    fill_scores(r, real, train_tracks, classes);
    ro.predictions_csv = probe::predictions_csv(real.preds, real.truths, classes);
  }
  std::ostringstream msg;
  msg << r.protocol << "[" << contrastive::to_string(ctx.regime) << "] seed " << run.seed << " top1 " << r.top1
      << " top5 " << r.top5 << " (" << r.probe_epochs << " probe epochs)";
  log_info(msg.str());
  return ro;
}

nn::Checkpoint probe_checkpoint(const TrainedRun& run, Regime regime) {
  nn::Checkpoint ck;
  ck.groups["probe"] = run.head.params;
  json hist = json::array();
  for (const auto& h : run.head.history) hist.push_back({h.epoch, h.train_loss, h.val_loss, h.val_accuracy, h.lr});
  ck.meta = {{"kind", "probe"},
             {"seed", run.seed},
             {"protocol", run.protocol},
             {"n_classes", run.n_classes},
             {"classes", run.classes},
             {"regime", contrastive::to_string(regime)},
             {"in_dim", run.head.config.in_dim},
             {"dims", run.head.config.dims},
             {"stop_reason", run.head.stop_reason},
             {"history", hist}};
  return ck;
}

TrainedRun probe_from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.meta.value("kind", "") != "probe" || !ck.groups.contains("probe")) {
    throw std::invalid_argument("not a probe checkpoint");
  }
  TrainedRun run;
  run.seed = ck.meta.at("seed").get<std::uint64_t>();
  run.protocol = ck.meta.at("protocol").get<std::string>();
  run.n_classes = ck.meta.at("n_classes").get<int>();
  run.classes = ck.meta.at("classes").get<std::vector<SingerId>>();
  run.head.config.in_dim = ck.meta.at("in_dim").get<int>();
  run.head.config.dims = ck.meta.at("dims").get<std::vector<int>>();
  run.head.stop_reason = ck.meta.value("stop_reason", "");
  const nn::MlpHead<float> mlp(run.head.config);
  run.head.params = mlp.make_params();
  nn::assign_group(run.head.params, ck.groups.at("probe"), "probe");
  for (const auto& h : ck.meta.at("history")) {
    run.head.history.push_back({h[0].get<int>(), h[1].get<double>(), h[2].get<double>(), h[3].get<double>(),
                                h[4].get<double>()});
  }
  return run;
}

std::vector<RunOutput> run_identification(Context& ctx, int n_classes, const std::vector<std::uint64_t>& seeds) {
  return run_protocol(ctx, n_classes, seeds, false);
}

std::vector<RunOutput> run_cloned_eval(Context& ctx, int n_classes, const std::vector<std::uint64_t>& seeds) {
  return run_protocol(ctx, n_classes, seeds, true);
}

double cosine(const nn::RowVector<float>& a, const nn::RowVector<float>& b) {
  const double na = a.cast<double>().norm(), nb = b.cast<double>().norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine of a zero vector");
  return a.cast<double>().dot(b.cast<double>()) / (na * nb);
}

namespace {

// Mean cosine over all (row of a, row of b) pairs; with same = true the
// diagonal (i == j) is skipped. nullopt when there are no pairs.
std::optional<double> mean_cross(const nn::Matrix<float>& a, const nn::Matrix<float>& b, bool same) {
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      if (same && i == j) continue;
      sum += cosine(a.row(i), b.row(j));
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::map<std::string, double> cosine_reference_analysis(const synth::CatalogManifest& manifest,
                                                        const data::SplitSpec& split, EmbeddingBank& bank,
                                                        Regime regime, std::uint64_t seed) {
  using audio::SourceKind;
  const SourceKind domain = contrastive::eval_kind(regime);
  const auto test_ids = split.tracks_with(data::Role::kIdTest);
  std::map<SingerId, std::string> val_of;
  for (const auto& id : split.tracks_with(data::Role::kIdVal)) val_of[manifest.find(id).singer_id] = id;
  if (test_ids.size() < 2) throw std::invalid_argument("cosine analysis needs test tracks of at least 2 singers");

  Rng rng(derive_seed({seed, hash_string("cosine-other")}));
  std::map<std::string, std::pair<double, int>> acc;
  auto add = [&](const std::string& key, std::optional<double> v) {
    if (!v) return;
    acc[key].first += *v;
    acc[key].second += 1;
  };
  for (const auto& id : test_ids) {
    const auto& e = manifest.find(id);
    const auto offs = data::vocal_offsets(e, kInferenceSegmentHop);
    if (offs.empty()) continue;
    const auto test = bank.get(refs_at(e, domain, offs));
    add("test/test", mean_cross(test, test, true));
    if (!e.vocal_path.empty()) add("test/vocal", mean_cross(test, bank.get(refs_at(e, SourceKind::kVocalStem, offs)), false));
    if (!e.instrumental_path.empty()) {
      add("test/instru", mean_cross(test, bank.get(refs_at(e, SourceKind::kInstrumentalStem, offs)), false));
    }
    if (const auto it = val_of.find(e.singer_id); it != val_of.end()) {
      const auto& v = manifest.find(it->second);
      add("test/val", mean_cross(test, bank.get(refs_at(v, domain, split.fixed_val_segments.at(v.track_id))), false));
    }
    std::vector<std::string> others;
    for (const auto& o : test_ids) {
      if (manifest.find(o).singer_id != e.singer_id) others.push_back(o);
    }
    if (!others.empty()) {
      const auto& o = manifest.find(others[rng.index(others.size())]);
      const auto oo = data::vocal_offsets(o, kInferenceSegmentHop);
      if (!oo.empty()) add("test/other", mean_cross(test, bank.get(refs_at(o, domain, oo)), false));
    }
  }
  std::map<std::string, double> out;
  for (const char* key : {"test/other", "test/val", "test/vocal", "test/instru", "test/test"}) {
    const auto it = acc.find(key);
    if (it == acc.end() || it->second.second == 0) throw std::runtime_error(std::string("no pairs for ") + key);
    out[key] = it->second.first / it->second.second;
  }
  return out;
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.n = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

namespace {

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(6);
  o << x;
  return o.str();
}

// Box plot (min, quartiles, max) per category on [0, 1].
std::string svg_boxplot(const std::string& title, const std::string& ylabel,
                        const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const int w = 120 + 90 * static_cast<int>(std::max<std::size_t>(series.size(), 1)), h = 320;
  const double top = 40, bottom = 270, left = 70;
  auto y = [&](double v) { return bottom - (bottom - top) * std::clamp(v, 0.0, 1.0); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  o << "<text x=\"14\" y=\"" << (top + bottom) / 2 << "\" transform=\"rotate(-90 14 " << (top + bottom) / 2
    << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    o << "<line x1=\"" << left << "\" x2=\"" << w - 20 << "\" y1=\"" << fmt(y(v)) << "\" y2=\"" << fmt(y(v))
      << "\" stroke=\"#ddd\"/>\n<text x=\"" << left - 6 << "\" y=\"" << fmt(y(v) + 4)
      << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    auto v = series[i].second;
    const double cx = left + 50 + 90.0 * static_cast<double>(i);
    o << "<text x=\"" << fmt(cx) << "\" y=\"" << bottom + 20 << "\" text-anchor=\"middle\">" << series[i].first
      << "</text>\n";
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
      const double idx = p * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(idx));
      const auto hi = std::min(lo + 1, v.size() - 1);
      return v[lo] + (v[hi] - v[lo]) * (idx - static_cast<double>(lo));
    };
    o << "<line x1=\"" << fmt(cx) << "\" x2=\"" << fmt(cx) << "\" y1=\"" << fmt(y(v.front())) << "\" y2=\""
      << fmt(y(v.back())) << "\" stroke=\"#333\"/>\n";
    o << "<rect x=\"" << fmt(cx - 20) << "\" y=\"" << fmt(y(q(0.75))) << "\" width=\"40\" height=\""
      << fmt(std::max(y(q(0.25)) - y(q(0.75)), 1.0)) << "\" fill=\"#8fb3d9\" stroke=\"#333\"/>\n";
    o << "<line x1=\"" << fmt(cx - 20) << "\" x2=\"" << fmt(cx + 20) << "\" y1=\"" << fmt(y(q(0.5))) << "\" y2=\""
      << fmt(y(q(0.5))) << "\" stroke=\"#000\" stroke-width=\"2\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

BreakdownFiles breakdown_reports(const std::vector<RunResult>& runs, int min_genre_tracks) {
  if (runs.empty()) throw std::invalid_argument("breakdown needs at least one run");
  BreakdownFiles f;
  std::map<std::string, std::vector<double>> genre_top5, bucket_top1;
  std::map<std::string, int> genre_min_n;
  for (const auto& r : runs) {
    for (const auto& [g, s] : r.per_genre) {
      genre_top5[g].push_back(s.top5);
      genre_min_n[g] = genre_min_n.contains(g) ? std::min(genre_min_n[g], s.n) : s.n;
    }
    for (const auto& [b, s] : r.per_bucket) bucket_top1[b].push_back(s.top1);
  }
  std::ostringstream gc;
  gc << "genre,n_tracks,top5_mean,top5_std,top5_min,top5_max,runs\n";
  std::vector<std::pair<std::string, std::vector<double>>> gseries;
  for (const auto& [g, v] : genre_top5) {
    if (genre_min_n[g] < min_genre_tracks) {
      f.omitted_genres.push_back(g);
      continue;
    }
    const auto s = summarize(v);
    gc << g << ',' << genre_min_n[g] << ',' << fmt(s.mean) << ',' << fmt(s.std) << ',' << fmt(s.min) << ','
       << fmt(s.max) << ',' << s.n << '\n';
    gseries.emplace_back(g, v);
  }
  std::ostringstream bc;
  bc << "bucket,top1_mean,top1_std,top1_min,top1_max,runs\n";
  std::vector<std::pair<std::string, std::vector<double>>> bseries;
  for (const char* b : {"5-9", "10-19", "20+"}) {
    const auto it = bucket_top1.find(b);
    if (it == bucket_top1.end()) continue;
    const auto s = summarize(it->second);
    bc << b << ',' << fmt(s.mean) << ',' << fmt(s.std) << ',' << fmt(s.min) << ',' << fmt(s.max) << ',' << s.n << '\n';
    bseries.emplace_back(b, it->second);
  }
  f.genre_csv = gc.str();
  f.bucket_csv = bc.str();
  f.genre_svg = svg_boxplot("Top-5 accuracy by genre", "top-5", gseries);
  f.bucket_svg = svg_boxplot("Top-1 accuracy by training tracks per singer", "top-1", bseries);
  return f;
}

void write_breakdown(const BreakdownFiles& f, const std::filesystem::path& dir) {
  write_file_atomic(dir / "genre.csv", f.genre_csv);
  write_file_atomic(dir / "bucket.csv", f.bucket_csv);
  write_file_atomic(dir / "genre.svg", f.genre_svg);
  write_file_atomic(dir / "bucket.svg", f.bucket_svg);
}

std::string aggregate_csv(const std::vector<RunResult>& runs) {
  std::ostringstream o;
  o << "row,protocol,regime,n_classes,run_seed,top1,top5,real_top1,real_top5\n";
  std::vector<double> t1, t5, r1, r5;
  for (const auto& r : runs) {
    o << "run," << r.protocol << ',' << contrastive::to_string(r.regime) << ',' << r.n_classes << ',' << r.run_seed
      << ',' << fmt(r.top1) << ',' << fmt(r.top5) << ',' << (r.real_top1 ? fmt(*r.real_top1) : "") << ','
      << (r.real_top5 ? fmt(*r.real_top5) : "") << '\n';
    t1.push_back(r.top1);
    t5.push_back(r.top5);
    if (r.real_top1) r1.push_back(*r.real_top1);
    if (r.real_top5) r5.push_back(*r.real_top5);
  }
  if (!runs.empty()) {
    const auto& r = runs.front();
    const auto opt = [](const std::vector<double>& v, bool mean) {
      if (v.empty()) return std::string();
      const auto s = summarize(v);
      return fmt(mean ? s.mean : s.std);
    };
    for (bool mean : {true, false}) {
      o << (mean ? "mean," : "std,") << r.protocol << ',' << contrastive::to_string(r.regime) << ',' << r.n_classes
        << ",," << opt(t1, mean) << ',' << opt(t5, mean) << ',' << opt(r1, mean) << ',' << opt(r5, mean) << '\n';
    }
  }
  return o.str();
}

}  // namespace singerlab::experiments
