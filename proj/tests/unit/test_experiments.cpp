#include <cmath>

#include "doctest.h"
#include "singerlab/experiments/experiments.hpp"
#include "support/fixtures.hpp"

using namespace singerlab;
using namespace singerlab::experiments;

TEST_CASE("train-count buckets") {
  CHECK_FALSE(train_count_bucket(4).has_value());
  CHECK(*train_count_bucket(5) == "5-9");
  CHECK(*train_count_bucket(9) == "5-9");
  CHECK(*train_count_bucket(12) == "10-19");
  CHECK(*train_count_bucket(19) == "10-19");
  CHECK(*train_count_bucket(20) == "20+");
}

TEST_CASE("cosine of identical vectors is 1 and values stay in [-1, 1]") {
  nn::RowVector<float> a(3), b(3);
  a << 1, 2, 3;
  b << -3, 0.5, 1;
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(std::abs(cosine(a, b)) <= 1.0);
  CHECK(cosine(a, -a) == doctest::Approx(-1.0));
  CHECK_THROWS(cosine(a, nn::RowVector<float>::Zero(3)));
}

TEST_CASE("summaries, aggregate csv, run json round trip") {
  const auto s = summarize({0.2, 0.4, 0.6});
  CHECK(s.mean == doctest::Approx(0.4));
  CHECK(s.std == doctest::Approx(0.2));
  RunResult r;
  r.run_seed = 3;
  r.protocol = "cloned";
  r.n_classes = 8;
  r.regime = Regime::kHybrid;
  r.top1 = 0.25;
  r.top5 = 0.75;
  r.per_genre["dry"] = {0.5, 1.0, 4};
  r.per_bucket["5-9"] = {0.25, 8};
  r.cosine_profile["test/test"] = 0.9;
  r.real_top1 = 0.5;
  const auto back = RunResult::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  const auto csv = aggregate_csv({r, back});
  CHECK(csv.find("mean,cloned,hybrid,8,,0.25,0.75,0.5,") != std::string::npos);
}

TEST_CASE("breakdown reports: omission threshold, buckets, empty rejection") {
  RunResult a, b;
  a.per_genre["dry"] = {0.5, 0.9, 12};
  a.per_genre["vocoder"] = {0.1, 0.3, 3};
  b.per_genre["dry"] = {0.4, 0.8, 12};
  b.per_genre["vocoder"] = {0.2, 0.4, 3};
  a.per_bucket["5-9"] = {0.5, 12};
  b.per_bucket["10-19"] = {0.7, 4};
  const auto f = breakdown_reports({a, b}, 10);
  CHECK(f.omitted_genres == std::vector<std::string>{"vocoder"});
  CHECK(f.genre_csv.find("dry,12,0.85,") != std::string::npos);
  CHECK(f.genre_csv.find("vocoder") == std::string::npos);
  CHECK(f.bucket_csv.find("5-9,0.5,") != std::string::npos);
  CHECK(f.bucket_csv.find("10-19,0.7,") != std::string::npos);
  CHECK(f.genre_svg.rfind("<svg", 0) == 0);
  CHECK(breakdown_reports({a, b}, 3).omitted_genres.empty());
  CHECK_THROWS(breakdown_reports({}, 10));
}

TEST_CASE("identification and cloned protocols on a small catalog") {
  const auto dir = fixture::small_catalog(77);
  const auto m = synth::read_manifest(dir / "manifest.jsonl");
  const auto splits = fixture::small_splits(m, 77);
  data::MelStore store(m, dir);
  auto cfg = nn::EncoderConfig::desk();
  cfg.width = 32;
  cfg.depth = 1;
  const nn::Encoder<float> enc(cfg);
  EmbeddingBank bank(cfg, enc.init_params(1), store);
  const auto frozen = bank.params().checksum();
  Context ctx{&m, &splits.id, Regime::kVocal, &bank, {}};
  ctx.probe.max_epochs = 5;

  const auto ids = run_identification(ctx, 3, {1, 2});
  REQUIRE(ids.size() == 2);
  for (const auto& o : ids) {
    CHECK(o.result.n_classes == 3);
    CHECK(o.result.n_tracks == 3);
    CHECK(o.result.top1 <= o.result.top5);
    CHECK(o.result.top1 >= 0.0);
    CHECK(o.result.top5 <= 1.0);
    CHECK(o.result.per_bucket.contains("5-9"));
  }
  CHECK_THROWS(run_identification(ctx, 3, {1, 1}));
  CHECK_THROWS(run_identification(ctx, 9, {1}));

  const auto sources = clone_sources(splits.id, m);
  CHECK(sources.size() == 2);
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const probe::ClassMap classes(data::sample_class_subset(id_singers(splits.id, m), 2, sources, seed));
    for (auto s : sources) CHECK(classes.contains(s));
    for (const auto& id : probe_training_tracks(ctx, classes)) {
      CHECK_FALSE(m.find(id).is_clone);
      CHECK(splits.id.assignments.at(id) == data::Role::kIdTrain);
    }
  }
  const auto cl = run_cloned_eval(ctx, 2, {7});
  CHECK(cl.front().result.protocol == "cloned");
  CHECK(cl.front().result.n_tracks == 2);
  CHECK(cl.front().result.real_top1.has_value());
  CHECK(cl.front().predictions_csv.find("clone") != std::string::npos);

  const auto prof = cosine_reference_analysis(m, splits.id, bank, Regime::kVocal, 1);
  CHECK(prof.size() == 5);
  for (const auto& [k, v] : prof) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK(cosine_reference_analysis(m, splits.id, bank, Regime::kVocal, 1) == prof);
  // vocal domain: the test track is its own vocal stem, so every diagonal pair is 1
  CHECK(prof.at("test/vocal") >= prof.at("test/test") - 1e-9);
  const auto mixed = cosine_reference_analysis(m, splits.id, bank, Regime::kMixture, 1);
  CHECK(mixed.at("test/vocal") != prof.at("test/vocal"));
  CHECK(bank.params().checksum() == frozen);

  // probe checkpoint round trip scores identically
  const auto run = train_run(ctx, 3, 4, false);
  const auto bytes = nn::serialize_checkpoint(probe_checkpoint(run, Regime::kVocal));
  const auto loaded = probe_from_checkpoint(nn::parse_checkpoint(bytes));
  CHECK(loaded.seed == 4);
  CHECK(loaded.protocol == "closed_set");
  CHECK(loaded.classes == run.classes);
  CHECK(loaded.head.params.checksum() == run.head.params.checksum());
  CHECK(score_run(ctx, loaded).predictions_csv == score_run(ctx, run).predictions_csv);
  CHECK_THROWS(probe_from_checkpoint(nn::parse_checkpoint(
      nn::serialize_checkpoint(nn::Checkpoint{{{"kind", "pretrain"}}, {}}))));

  // reruns are bit-identical
  const auto again = run_identification(ctx, 3, {1, 2});
  CHECK(again[0].result.to_json() == ids[0].result.to_json());
  CHECK(again[1].predictions_csv == ids[1].predictions_csv);
}
