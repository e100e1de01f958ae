#include "singerlab/synth/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "singerlab/audio/activity.hpp"
#include "singerlab/audio/wav.hpp"
#include "singerlab/common/io.hpp"

namespace singerlab::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTrackTag = 0x71;
constexpr std::uint64_t kCatalogTag = 0x72;

std::string singer_tag(SingerId s) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%04u", s);
  return buf;
}

std::string track_name(SingerId s, const char* kind, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%s%02d", singer_tag(s).c_str(), kind, index);
  return buf;
}

Genre draw_genre(Rng& rng, const std::array<double, 4>& w) {
  const double total = w[0] + w[1] + w[2] + w[3];
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < 4; ++i) {
    if (u < w[i]) return kSynthGenres[i];
    u -= w[i];
  }
  return Genre::kElectronic;
}

double draw_duration(Rng& rng, double lo, double hi) {
  const auto steps = static_cast<std::size_t>(std::floor(hi - lo)) + 1;
  return lo + static_cast<double>(rng.index(steps));
}

json entry_to_json(const CatalogEntry& e, const CatalogManifest& m) {
  json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["generator_version"] = m.generator_version;
  j["master_seed"] = m.master_seed;
  j["track_id"] = e.track_id;
  j["singer_id"] = e.singer_id;
  j["pool"] = to_string(e.pool);
  j["genre"] = to_string(e.genre);
  j["instrumental_style_id"] = e.instrumental_style_id;
  j["duration_s"] = e.duration_s;
  j["vocal_mask"] = e.vocal_mask;
  j["vocal_fraction"] = e.vocal_fraction();
  j["is_clone"] = e.is_clone;
  j["clone_source_singer"] = e.clone_source_singer ? json(*e.clone_source_singer) : json(nullptr);
  j["render_seed"] = e.render_seed;
  j["perturbation_level"] = e.perturbation_level;
  j["stems"] = {{"mixture", e.mixture_path}, {"vocal", e.vocal_path}, {"instrumental", e.instrumental_path}};
  return j;
}

void save_stems(const fs::path& dir, const CatalogEntry& e, const TrackRecord& rec) {
  audio::write_wav_pcm16(dir / e.mixture_path, rec.stems.mixture);
  audio::write_wav_pcm16(dir / e.vocal_path, rec.stems.vocal);
  audio::write_wav_pcm16(dir / e.instrumental_path, rec.stems.instrumental);
}

}  // namespace

const char* to_string(Pool p) {
  switch (p) {
    case Pool::kContrastive:
      return "contrastive";
    case Pool::kIdentification:
      return "id";
    case Pool::kCloned:
      return "cloned";
    case Pool::kExternal:
      return "external";
  }
  return "external";
}

Pool pool_from_string(const std::string& s) {
  if (s == "contrastive") return Pool::kContrastive;
  if (s == "id") return Pool::kIdentification;
  if (s == "cloned") return Pool::kCloned;
  if (s == "external") return Pool::kExternal;
  throw std::invalid_argument("unknown pool '" + s + "'");
}

double CatalogEntry::vocal_fraction() const {
  if (vocal_mask.empty()) return 0.0;
  return static_cast<double>(std::count(vocal_mask.begin(), vocal_mask.end(), true)) / vocal_mask.size();
}

const CatalogEntry& CatalogManifest::find(const std::string& track_id) const {
  for (const auto& e : entries) {
    if (e.track_id == track_id) return e;
  }
  throw std::out_of_range("track '" + track_id + "' not in manifest");
}

CatalogConfig CatalogConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  CatalogConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  static const std::set<std::string> known{"schema_version",        "n_contrastive_singers",
                                           "contrastive_tracks_per_singer", "n_id_singers",
                                           "id_tracks_per_singer",  "n_clone_sources",
                                           "clones_per_source",     "min_duration_s",
                                           "max_duration_s",        "clone_perturbation",
                                           "silence_prob",          "genre_weights"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown catalog config key '" + key + "'");
  }
  get("n_contrastive_singers", c.n_contrastive_singers);
  get("contrastive_tracks_per_singer", c.contrastive_tracks_per_singer);
  get("n_id_singers", c.n_id_singers);
  get("id_tracks_per_singer", c.id_tracks_per_singer);
  get("n_clone_sources", c.n_clone_sources);
  get("clones_per_source", c.clones_per_source);
  get("min_duration_s", c.min_duration_s);
  get("max_duration_s", c.max_duration_s);
  get("clone_perturbation", c.clone_perturbation);
  get("silence_prob", c.silence_prob);
  get("genre_weights", c.genre_weights);
  return c;
}

std::string CatalogConfig::to_json_text() const {
  json j{{"schema_version", 1},
         {"n_contrastive_singers", n_contrastive_singers},
         {"contrastive_tracks_per_singer", contrastive_tracks_per_singer},
         {"n_id_singers", n_id_singers},
         {"id_tracks_per_singer", id_tracks_per_singer},
         {"n_clone_sources", n_clone_sources},
         {"clones_per_source", clones_per_source},
         {"min_duration_s", min_duration_s},
         {"max_duration_s", max_duration_s},
         {"clone_perturbation", clone_perturbation},
         {"silence_prob", silence_prob},
         {"genre_weights", genre_weights}};
  return j.dump(2);
}

CatalogManifest plan_catalog(const CatalogConfig& c, std::uint64_t master_seed) {
  if (c.n_contrastive_singers < 0 || c.n_id_singers < 0 || c.n_clone_sources < 0 || c.clones_per_source < 0) {
    throw std::invalid_argument("catalog counts must be non-negative");
  }
  if (c.n_contrastive_singers > 0 && c.contrastive_tracks_per_singer < 2) {
    throw std::invalid_argument("contrastive singers need at least 2 tracks each");
  }
  if (c.n_id_singers > 0 && c.id_tracks_per_singer < 7) {
    throw std::invalid_argument("identification singers need at least 7 tracks each");
  }
  if (c.n_clone_sources > c.n_id_singers) {
    throw std::invalid_argument("clone sources (" + std::to_string(c.n_clone_sources) + ") exceed ID singers (" +
                                std::to_string(c.n_id_singers) + ")");
  }
  if (c.n_clone_sources > 0 && c.n_id_singers < 2) {
    throw std::invalid_argument("clones need at least two ID singers (foreign styles)");
  }
  if (!(c.min_duration_s >= kMinTrackSeconds && c.max_duration_s <= kMaxTrackSeconds &&
        c.min_duration_s <= c.max_duration_s)) {
    throw std::invalid_argument("durations must satisfy 24 <= min <= max <= 120");
  }
  if (c.clone_perturbation < 0.0 || c.clone_perturbation > 1.0) {
    throw std::invalid_argument("clone perturbation must be in [0, 1]");
  }
  for (double w : c.genre_weights) {
    if (w < 0.0) throw std::invalid_argument("genre weights must be non-negative");
  }
  if (c.genre_weights[0] + c.genre_weights[1] + c.genre_weights[2] + c.genre_weights[3] <= 0.0) {
    throw std::invalid_argument("genre weights must not all be zero");
  }

  CatalogManifest m;
  m.master_seed = master_seed;

  auto add_track = [&](SingerId singer, Pool pool, const std::string& id, StyleId style) -> CatalogEntry& {
    CatalogEntry e;
    e.track_id = id;
    e.singer_id = singer;
    e.pool = pool;
    e.instrumental_style_id = style;
    e.render_seed = derive_seed({master_seed, kTrackTag, hash_string(id)});
    Rng rng(e.render_seed);
    e.genre = draw_genre(rng, c.genre_weights);
    e.duration_s = draw_duration(rng, c.min_duration_s, c.max_duration_s);
    e.vocal_mask = draw_vocal_mask(e.render_seed, e.duration_s, c.silence_prob);
    e.mixture_path = "audio/" + id + "_mixture.wav";
    e.vocal_path = "audio/" + id + "_vocal.wav";
    e.instrumental_path = "audio/" + id + "_instrumental.wav";
    m.entries.push_back(std::move(e));
    return m.entries.back();
  };

  SingerId next = 0;
  for (int s = 0; s < c.n_contrastive_singers; ++s, ++next) {
    for (int t = 0; t < c.contrastive_tracks_per_singer; ++t) {
      add_track(next, Pool::kContrastive, track_name(next, "t", t), next);
    }
  }
  std::vector<SingerId> id_singers;
  for (int s = 0; s < c.n_id_singers; ++s, ++next) {
    id_singers.push_back(next);
    for (int t = 0; t < c.id_tracks_per_singer; ++t) {
      add_track(next, Pool::kIdentification, track_name(next, "t", t), next);
    }
  }

  Rng pick(derive_seed({master_seed, kCatalogTag}));
  std::vector<SingerId> sources = id_singers;
  pick.shuffle(sources);
  sources.resize(static_cast<std::size_t>(c.n_clone_sources));
  std::sort(sources.begin(), sources.end());
  for (SingerId src : sources) {
    for (int k = 0; k < c.clones_per_source; ++k) {
      // Foreign instrumental: the home style of a different ID singer.
      SingerId other;
      do {
        other = id_singers[pick.index(id_singers.size())];
      } while (other == src);
      CatalogEntry& e = add_track(src, Pool::kCloned, track_name(src, "clone", k), other);
      e.is_clone = true;
      e.clone_source_singer = src;
      e.perturbation_level = c.clone_perturbation;
    }
  }
  return m;
}

TrackRecord render_entry(const CatalogEntry& e, std::uint64_t master_seed) {
  const SingerTimbre timbre = make_singer(master_seed, e.clone_source_singer.value_or(e.singer_id));
  const InstrumentalStyle style = make_style(master_seed, e.instrumental_style_id);
  TrackRecord rec;
  if (e.is_clone) {
    const std::vector<StyleId> home{static_cast<StyleId>(timbre.singer_id)};
    rec = clone_track(timbre, style, home, e.perturbation_level, e.genre, e.render_seed, e.duration_s);
  } else {
    RenderOptions opts;
    opts.vocal_mask = e.vocal_mask;
    rec = render_track(timbre, style, e.genre, e.render_seed, e.duration_s, opts);
  }
  rec.track_id = e.track_id;
  rec.singer_id = e.singer_id;
  return rec;
}

CatalogManifest build_catalog(const CatalogConfig& config, std::uint64_t master_seed, const fs::path& out_dir,
                              int jobs) {
  CatalogManifest m = plan_catalog(config, master_seed);
  fs::create_directories(out_dir / "audio");
  // Each track is rendered from its own seed, so completion order never
  // affects the output.
  const std::size_t workers = static_cast<std::size_t>(std::max(1, jobs));
  std::size_t next = 0;
  std::vector<std::future<void>> running;
  while (next < m.entries.size() || !running.empty()) {
    while (running.size() < workers && next < m.entries.size()) {
      const CatalogEntry* e = &m.entries[next++];
      auto task = [e, &out_dir, master_seed] { save_stems(out_dir, *e, render_entry(*e, master_seed)); };
      if (workers == 1) {
        task();
      } else {
        running.push_back(std::async(std::launch::async, task));
      }
    }
    if (!running.empty()) {
      running.front().get();
      running.erase(running.begin());
    }
  }
  write_manifest(out_dir / "manifest.jsonl", m);
  return m;
}

std::string manifest_to_jsonl(const CatalogManifest& m) {
  std::string out;
  for (const auto& e : m.entries) {
    out += entry_to_json(e, m).dump();
    out += '\n';
  }
  return out;
}

CatalogManifest manifest_from_jsonl(const std::string& text) {
  CatalogManifest m;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
      if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
        throw std::invalid_argument("unsupported schema_version");
      }
      CatalogEntry e;
      e.track_id = j.at("track_id").get<std::string>();
      e.singer_id = j.at("singer_id").get<SingerId>();
      e.pool = pool_from_string(j.at("pool").get<std::string>());
      e.genre = genre_from_string(j.at("genre").get<std::string>());
      e.instrumental_style_id = j.at("instrumental_style_id").get<StyleId>();
      e.duration_s = j.at("duration_s").get<double>();
      e.vocal_mask = j.at("vocal_mask").get<std::vector<bool>>();
      e.is_clone = j.at("is_clone").get<bool>();
      if (!j.at("clone_source_singer").is_null()) e.clone_source_singer = j.at("clone_source_singer").get<SingerId>();
      e.render_seed = j.value("render_seed", std::uint64_t{0});
      e.perturbation_level = j.value("perturbation_level", 0.0);
      const json& stems = j.at("stems");
      e.mixture_path = stems.at("mixture").get<std::string>();
      e.vocal_path = stems.value("vocal", "");
      e.instrumental_path = stems.value("instrumental", "");
      if (first) {
        m.master_seed = j.value("master_seed", std::uint64_t{0});
        m.generator_version = j.value("generator_version", std::string{});
        first = false;
      }
      m.entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw std::invalid_argument("manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return m;
}

void write_manifest(const fs::path& path, const CatalogManifest& manifest) {
  write_file_atomic(path, manifest_to_jsonl(manifest));
}

CatalogManifest read_manifest(const fs::path& path) { return manifest_from_jsonl(read_file(path)); }

std::vector<std::string> validate_manifest(const CatalogManifest& m) {
  std::vector<std::string> problems;
  std::set<std::string> ids;
  std::map<SingerId, int> real_tracks;
  for (const auto& e : m.entries) {
    if (!ids.insert(e.track_id).second) problems.push_back("duplicate track id " + e.track_id);
    if (!e.is_clone) ++real_tracks[e.singer_id];
    if (e.vocal_mask.size() != audio::activity_window_count(e.duration_s)) {
      problems.push_back("mask length mismatch for " + e.track_id);
    }
    if (e.is_clone && !e.clone_source_singer) problems.push_back("clone without source: " + e.track_id);
  }
  for (const auto& e : m.entries) {
    if (e.is_clone && e.clone_source_singer && real_tracks[*e.clone_source_singer] < 1) {
      problems.push_back("clone " + e.track_id + " references singer without real tracks");
    }
  }
  return problems;
}

CatalogManifest ingest_external(const fs::path& list_path, const fs::path& out_dir) {
  const std::string text = read_file(list_path);
  const fs::path base = list_path.parent_path();
  CatalogManifest m;
  m.generator_version = "external";
  fs::create_directories(out_dir / "audio");
  std::istringstream in(text);
  std::string line;
  int index = 0;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line);
    CatalogEntry e;
    e.singer_id = j.at("singer").get<SingerId>();
    e.pool = Pool::kExternal;
    e.genre = genre_from_string(j.value("genre", std::string("unknown")));
    char buf[48];
    std::snprintf(buf, sizeof(buf), "ext%05d_%s", index++, singer_tag(e.singer_id).c_str());
    e.track_id = buf;

    const audio::AudioClip mix = audio::load_audio_16k(resolve(j.at("path").get<std::string>()));
    e.duration_s = mix.duration_s();
    const auto activity = audio::measure_activity(mix, audio::EnergyHeuristicActivity{});
    e.vocal_mask = activity.flags;
    e.mixture_path = "audio/" + e.track_id + "_mixture.wav";
    audio::write_wav_pcm16(out_dir / e.mixture_path, mix);
    if (j.contains("vocal_path")) {
      e.vocal_path = "audio/" + e.track_id + "_vocal.wav";
      audio::write_wav_pcm16(out_dir / e.vocal_path, audio::load_audio_16k(resolve(j.at("vocal_path"))));
    }
    if (j.contains("instrumental_path")) {
      e.instrumental_path = "audio/" + e.track_id + "_instrumental.wav";
      audio::write_wav_pcm16(out_dir / e.instrumental_path,
                             audio::load_audio_16k(resolve(j.at("instrumental_path"))));
    }
    m.entries.push_back(std::move(e));
  }
  write_manifest(out_dir / "manifest.jsonl", m);
  return m;
}

}  // namespace singerlab::synth
