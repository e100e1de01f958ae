#include <map>
#include <set>

#include "doctest.h"
#include "singerlab/data/splits.hpp"

using namespace singerlab;
using namespace singerlab::data;
using singerlab::synth::CatalogEntry;

namespace {

// Mask with `vocal` of `windows` 3 s windows flagged (leading windows vocal).
CatalogEntry entry(const std::string& id, SingerId singer, int vocal, int windows = 8) {
  CatalogEntry e;
  e.track_id = id;
  e.singer_id = singer;
  e.pool = synth::Pool::kIdentification;
  e.duration_s = 3.0 * windows;
  e.vocal_mask.assign(static_cast<std::size_t>(windows), false);
  for (int i = 0; i < vocal; ++i) e.vocal_mask[static_cast<std::size_t>(i)] = true;
  return e;
}

std::vector<std::string> ids(const std::vector<CatalogEntry>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.track_id);
  return out;
}

std::vector<CatalogEntry> singer_tracks(SingerId s, int n, int vocal = 8) {
  std::vector<CatalogEntry> out;
  for (int t = 0; t < n; ++t) out.push_back(entry("s" + std::to_string(s) + "_t" + std::to_string(t), s, vocal));
  return out;
}

}  // namespace

TEST_CASE("filter_vocalness") {
  // Fractions 0.8, 0.7, 0.75 via 20-window masks.
  const std::vector<CatalogEntry> in{entry("a", 1, 16, 20), entry("b", 1, 14, 20), entry("c", 1, 15, 20)};
  CHECK(ids(filter_vocalness(in, 0.75)) == std::vector<std::string>{"a", "c"});
  CHECK(ids(filter_vocalness(in, 0.5)) == std::vector<std::string>{"a", "b", "c"});
  CHECK(filter_vocalness({}, 0.75).empty());
  CHECK_THROWS_AS(filter_vocalness(in, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(filter_vocalness(in, 1.5), std::invalid_argument);
}

TEST_CASE("filter_min_tracks") {
  const std::vector<CatalogEntry> in{entry("a1", 1, 8), entry("b1", 2, 8), entry("a2", 1, 8)};
  CHECK(ids(filter_min_tracks(in, 2)) == std::vector<std::string>{"a1", "a2"});
  CHECK(ids(filter_min_tracks(in, 1)) == ids(in));
  CHECK(filter_min_tracks(singer_tracks(3, 6), 7).empty());
  CHECK(filter_min_tracks(singer_tracks(3, 7), 7).size() == 7u);
  CHECK_THROWS_AS(filter_min_tracks(in, 0), std::invalid_argument);
}

TEST_CASE("filters are idempotent") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CatalogEntry> in;
    const int n = static_cast<int>(rng.index(40));
    for (int i = 0; i < n; ++i) {
      in.push_back(entry("t" + std::to_string(i), static_cast<SingerId>(rng.index(8)),
                         static_cast<int>(rng.index(9)), 8));
    }
    const double th = rng.uniform(0.05, 1.0);
    const int k = 1 + static_cast<int>(rng.index(6));
    CHECK(ids(filter_vocalness(filter_vocalness(in, th), th)) == ids(filter_vocalness(in, th)));
    CHECK(ids(filter_min_tracks(filter_min_tracks(in, k), k)) == ids(filter_min_tracks(in, k)));
  }
}

TEST_CASE("build_contrastive_split") {
  std::vector<CatalogEntry> in;
  for (SingerId s = 0; s < 10; ++s) {
    auto t = singer_tracks(s, 2 + static_cast<int>(s % 3));
    in.insert(in.end(), t.begin(), t.end());
  }
  const SplitSpec a = build_contrastive_split(in, 4, 17);
  std::map<SingerId, int> val_tracks;
  std::set<SingerId> train_singers;
  for (const auto& e : in) {
    auto it = a.assignments.find(e.track_id);
    if (it == a.assignments.end()) continue;
    if (it->second == Role::kContrastiveVal) {
      ++val_tracks[e.singer_id];
      REQUIRE(a.fixed_val_segments.at(e.track_id).size() == 1u);
    } else {
      train_singers.insert(e.singer_id);
    }
  }
  CHECK(val_tracks.size() == 4u);
  for (const auto& [s, n] : val_tracks) CHECK(n == 2);
  CHECK(train_singers.size() == 6u);
  CHECK(build_contrastive_split(in, 4, 17) == a);
  CHECK_THROWS_AS(build_contrastive_split(in, 11, 17), std::invalid_argument);
  CHECK_THROWS_AS(build_contrastive_split({entry("x", 1, 8)}, 0, 1), std::invalid_argument);
}

TEST_CASE("build_id_split") {
  auto in = singer_tracks(1, 8);
  auto five = singer_tracks(2, 5);
  in.insert(in.end(), five.begin(), five.end());
  // Validation candidate with only two vocal 6 s segments (first 12 s).
  auto sparse = singer_tracks(3, 5, 4);
  in.insert(in.end(), sparse.begin(), sparse.end());

  const SplitSpec s = build_id_split(in, 3);
  std::map<SingerId, std::map<Role, int>> counts;
  for (const auto& e : in) ++counts[e.singer_id][s.assignments.at(e.track_id)];
  CHECK(counts[1][Role::kIdTest] == 1);
  CHECK(counts[1][Role::kIdVal] == 1);
  CHECK(counts[1][Role::kIdTrain] == 6);
  CHECK(counts[2][Role::kIdTrain] == 3);
  for (const auto& val : s.tracks_with(Role::kIdVal)) {
    const auto& offs = s.fixed_val_segments.at(val);
    CHECK(offs.size() == 4u);
    const bool sparse_track = val.rfind("s3_", 0) == 0;
    for (double o : offs) {
      if (sparse_track) CHECK((o == 0.0 || o == 6.0));
    }
  }
  CHECK(build_id_split(in, 3) == s);
  CHECK_THROWS_AS(build_id_split(singer_tracks(4, 4), 3), std::invalid_argument);
}

TEST_CASE("build_id_split assigns clones of pool singers") {
  auto in = singer_tracks(1, 7);
  CatalogEntry clone = entry("s1_clone0", 1, 8);
  clone.is_clone = true;
  clone.clone_source_singer = 1;
  in.push_back(clone);
  const SplitSpec s = build_id_split(in, 1);
  CHECK(s.assignments.at("s1_clone0") == Role::kClonedEval);
  CHECK(s.tracks_with(Role::kIdTrain).size() == 5u);
}

TEST_CASE("sample_class_subset") {
  std::vector<SingerId> pool;
  for (SingerId s = 0; s < 150; ++s) pool.push_back(s);
  std::set<SingerId> must;
  for (SingerId s = 0; s < 67; ++s) must.insert(s * 2);

  const auto exact = sample_class_subset(pool, 67, must, 1);
  CHECK(std::set<SingerId>(exact.begin(), exact.end()) == must);

  const auto sub = sample_class_subset(pool, 100, must, 9);
  const std::set<SingerId> sub_set(sub.begin(), sub.end());
  CHECK(sub_set.size() == 100u);
  for (SingerId s : must) CHECK(sub_set.count(s) == 1);
  CHECK(sample_class_subset(pool, 100, must, 9) == sub);
  CHECK(sample_class_subset(pool, 100, must, 10) != sub);
  CHECK_THROWS_AS(sample_class_subset(pool, 50, must, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_class_subset(pool, 151, must, 1), std::invalid_argument);
}

TEST_CASE("sample_class_subset fills uniformly") {
  std::vector<SingerId> pool{0, 1, 2, 3, 4, 5};
  std::map<SingerId, int> hits;
  constexpr int kDraws = 6000;
  for (int seed = 0; seed < kDraws; ++seed) {
    for (SingerId s : sample_class_subset(pool, 3, {0}, static_cast<std::uint64_t>(seed))) ++hits[s];
  }
  CHECK(hits[0] == kDraws);
  // Each of the 5 optional singers fills one of 2 slots: expected 2/5.
  for (SingerId s = 1; s < 6; ++s) CHECK(hits[s] / static_cast<double>(kDraws) == doctest::Approx(0.4).epsilon(0.1));
}

TEST_CASE("split JSON round trip") {
  auto in = singer_tracks(1, 8);
  const SplitSpec s = build_id_split(in, 42);
  CHECK(split_from_json(split_to_json(s)) == s);
}
