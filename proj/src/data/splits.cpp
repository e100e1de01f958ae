#include "singerlab/data/splits.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"
#include "singerlab/audio/activity.hpp"
#include "singerlab/common/rng.hpp"

namespace singerlab::data {

using nlohmann::json;

namespace {

constexpr std::uint64_t kContrastiveTag = 0xC0;
constexpr std::uint64_t kIdTag = 0x1D;
constexpr std::uint64_t kSubsetTag = 0x5B;

std::map<SingerId, std::vector<const CatalogEntry*>> by_singer(const std::vector<CatalogEntry>& entries,
                                                                bool real_only) {
  std::map<SingerId, std::vector<const CatalogEntry*>> out;
  for (const auto& e : entries) {
    if (real_only && e.is_clone) continue;
    out[e.singer_id].push_back(&e);
  }
  return out;
}

}  // namespace

const char* to_string(Role r) {
  switch (r) {
    case Role::kContrastiveTrain:
      return "contrastive_train";
    case Role::kContrastiveVal:
      return "contrastive_val";
    case Role::kIdTrain:
      return "id_train";
    case Role::kIdVal:
      return "id_val";
    case Role::kIdTest:
      return "id_test";
    case Role::kClonedEval:
      return "cloned_eval";
  }
  return "?";
}

Role role_from_string(const std::string& s) {
  for (Role r : {Role::kContrastiveTrain, Role::kContrastiveVal, Role::kIdTrain, Role::kIdVal, Role::kIdTest,
                 Role::kClonedEval}) {
    if (s == to_string(r)) return r;
  }
  throw std::invalid_argument("unknown split role '" + s + "'");
}

std::vector<std::string> SplitSpec::tracks_with(Role role) const {
  std::vector<std::string> out;
  for (const auto& [track, r] : assignments) {
    if (r == role) out.push_back(track);
  }
  return out;
}

std::vector<CatalogEntry> filter_vocalness(const std::vector<CatalogEntry>& entries, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("vocalness threshold must be in (0, 1]");
  }
  std::vector<CatalogEntry> out;
  for (const auto& e : entries) {
    if (e.vocal_fraction() >= threshold) out.push_back(e);
  }
  return out;
}

std::vector<CatalogEntry> filter_min_tracks(const std::vector<CatalogEntry>& entries, int k) {
  if (k < 1) throw std::invalid_argument("minimum track count must be >= 1");
  std::map<SingerId, int> counts;
  for (const auto& e : entries) ++counts[e.singer_id];
  std::vector<CatalogEntry> out;
  for (const auto& e : entries) {
    if (counts[e.singer_id] >= k) out.push_back(e);
  }
  return out;
}

std::vector<double> vocal_offsets(const CatalogEntry& entry, double hop_s) {
  if (entry.duration_s < audio::kSegmentSeconds) return {};
  return audio::segment_track(entry.duration_s, audio::VocalActivity::from_flags(entry.vocal_mask), hop_s);
}

SplitSpec build_contrastive_split(const std::vector<CatalogEntry>& entries, int n_val_singers, std::uint64_t seed) {
  const auto singers = by_singer(entries, true);
  for (const auto& [s, tracks] : singers) {
    if (tracks.size() < 2) {
      throw std::invalid_argument("singer " + std::to_string(s) + " has fewer than 2 tracks");
    }
  }
  if (n_val_singers < 0 || static_cast<std::size_t>(n_val_singers) > singers.size()) {
    throw std::invalid_argument("n_val_singers (" + std::to_string(n_val_singers) + ") exceeds the " +
                                std::to_string(singers.size()) + " available singers");
  }

  Rng rng(derive_seed({seed, kContrastiveTag}));
  std::vector<SingerId> order;
  for (const auto& kv : singers) order.push_back(kv.first);
  rng.shuffle(order);

  SplitSpec split;
  split.mode = "contrastive";
  split.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto tracks = singers.at(order[i]);
    if (i < static_cast<std::size_t>(n_val_singers)) {
      rng.shuffle(tracks);
      for (int t = 0; t < 2; ++t) {
        const CatalogEntry& e = *tracks[static_cast<std::size_t>(t)];
        auto offs = vocal_offsets(e, audio::kActivityWindowSeconds);
        if (offs.empty()) throw std::invalid_argument("validation track " + e.track_id + " has no vocal segment");
        split.assignments[e.track_id] = Role::kContrastiveVal;
        split.fixed_val_segments[e.track_id] = {offs[rng.index(offs.size())]};
      }
    } else {
      for (const CatalogEntry* e : tracks) split.assignments[e->track_id] = Role::kContrastiveTrain;
    }
  }
  return split;
}

SplitSpec build_id_split(const std::vector<CatalogEntry>& entries, std::uint64_t seed) {
  const auto singers = by_singer(entries, true);
  for (const auto& [s, tracks] : singers) {
    if (tracks.size() < static_cast<std::size_t>(kOpenSetMinTracks)) {
      throw std::invalid_argument("singer " + std::to_string(s) + " has " + std::to_string(tracks.size()) +
                                  " tracks; identification needs at least 5");
    }
  }

  SplitSpec split;
  split.mode = "id";
  split.seed = seed;
  for (const auto& [singer, tracks_in] : singers) {
    // Per-singer stream: adding a singer never reshuffles the others.
    Rng rng(derive_seed({seed, kIdTag, singer}));
    auto tracks = tracks_in;
    rng.shuffle(tracks);
    split.assignments[tracks[0]->track_id] = Role::kIdTest;
    const CatalogEntry& val = *tracks[1];
    split.assignments[val.track_id] = Role::kIdVal;
    for (std::size_t t = 2; t < tracks.size(); ++t) split.assignments[tracks[t]->track_id] = Role::kIdTrain;

    auto offs = vocal_offsets(val, audio::kSegmentSeconds);
    if (offs.empty()) offs = vocal_offsets(val, audio::kActivityWindowSeconds);
    if (offs.empty()) throw std::invalid_argument("validation track " + val.track_id + " has no vocal segment");
    std::vector<double> chosen;
    if (offs.size() >= static_cast<std::size_t>(kIdValSegments)) {
      rng.shuffle(offs);
      chosen.assign(offs.begin(), offs.begin() + kIdValSegments);
      std::sort(chosen.begin(), chosen.end());
    } else {
      for (int k = 0; k < kIdValSegments; ++k) chosen.push_back(offs[rng.index(offs.size())]);
    }
    split.fixed_val_segments[val.track_id] = chosen;
  }
  for (const auto& e : entries) {
    if (e.is_clone && e.clone_source_singer && singers.count(*e.clone_source_singer)) {
      split.assignments[e.track_id] = Role::kClonedEval;
    }
  }
  return split;
}

std::vector<SingerId> sample_class_subset(const std::vector<SingerId>& id_singers, std::size_t n,
                                          const std::set<SingerId>& must_include, std::uint64_t seed) {
  const std::set<SingerId> pool(id_singers.begin(), id_singers.end());
  for (SingerId s : must_include) {
    if (!pool.count(s)) throw std::invalid_argument("mandatory singer " + std::to_string(s) + " not in pool");
  }
  if (n < must_include.size() || n > pool.size()) {
    throw std::invalid_argument("class subset size " + std::to_string(n) + " outside [" +
                                std::to_string(must_include.size()) + ", " + std::to_string(pool.size()) + "]");
  }
  std::vector<SingerId> rest;
  for (SingerId s : pool) {
    if (!must_include.count(s)) rest.push_back(s);
  }
  Rng rng(derive_seed({seed, kSubsetTag}));
  rng.shuffle(rest);
  std::vector<SingerId> out(must_include.begin(), must_include.end());
  out.insert(out.end(), rest.begin(), rest.begin() + static_cast<long>(n - must_include.size()));
  std::sort(out.begin(), out.end());
  return out;
}

std::string split_to_json(const SplitSpec& split) {
  json j;
  j["schema_version"] = kSplitSchemaVersion;
  j["mode"] = split.mode;
  j["seed"] = split.seed;
  json a = json::object();
  for (const auto& [t, r] : split.assignments) a[t] = to_string(r);
  j["assignments"] = a;
  json f = json::object();
  for (const auto& [t, offs] : split.fixed_val_segments) f[t] = offs;
  j["fixed_val_segments"] = f;
  return j.dump(2);
}

SplitSpec split_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema_version").get<int>() != kSplitSchemaVersion) {
    throw std::invalid_argument("unsupported split schema_version");
  }
  SplitSpec s;
  s.mode = j.at("mode").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [t, r] : j.at("assignments").items()) s.assignments[t] = role_from_string(r.get<std::string>());
  for (const auto& [t, offs] : j.at("fixed_val_segments").items()) {
    s.fixed_val_segments[t] = offs.get<std::vector<double>>();
  }
  return s;
}

std::vector<std::string> validate_split(const SplitSpec& split, const synth::CatalogManifest& manifest) {
  std::vector<std::string> problems;
  std::map<SingerId, std::map<Role, int>> roles;
  for (const auto& [track, role] : split.assignments) {
    const CatalogEntry* entry = nullptr;
    for (const auto& e : manifest.entries) {
      if (e.track_id == track) entry = &e;
    }
    if (!entry) {
      problems.push_back("track " + track + " not in manifest");
      continue;
    }
    if (role != Role::kClonedEval) ++roles[entry->singer_id][role];
  }
  for (const auto& [singer, counts] : roles) {
    auto count = [&](Role r) { return counts.count(r) ? counts.at(r) : 0; };
    const bool contrastive = count(Role::kContrastiveTrain) + count(Role::kContrastiveVal) > 0;
    const bool id = count(Role::kIdTrain) + count(Role::kIdVal) + count(Role::kIdTest) > 0;
    const std::string who = "singer " + std::to_string(singer);
    if (contrastive && id) problems.push_back(who + " spans contrastive and ID roles");
    if (id && (count(Role::kIdTest) != 1 || count(Role::kIdVal) != 1 || count(Role::kIdTrain) < 3)) {
      problems.push_back(who + " does not have 1 test, 1 val and >= 3 train tracks");
    }
    if (count(Role::kContrastiveVal) != 0 && count(Role::kContrastiveVal) != 2) {
      problems.push_back(who + " has a contrastive validation set that is not 2 tracks");
    }
  }
  for (const auto& [track, role] : split.assignments) {
    const auto it = split.fixed_val_segments.find(track);
    if (role == Role::kIdVal && (it == split.fixed_val_segments.end() || it->second.size() != kIdValSegments)) {
      problems.push_back("id_val track " + track + " lacks 4 fixed segments");
    }
    if (role == Role::kContrastiveVal && (it == split.fixed_val_segments.end() || it->second.size() != 1)) {
      problems.push_back("contrastive_val track " + track + " lacks its fixed segment");
    }
  }
  return problems;
}

}  // namespace singerlab::data
