#include "singerlab/cli/config.hpp"

#include <sstream>

#include "singerlab/common/error.hpp"
#include "singerlab/common/io.hpp"
#include "singerlab/version.hpp"

namespace singerlab::cli {

using nlohmann::json;

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "manifest") c.manifest = v.get<std::string>();
      else if (k == "contrastive_split") c.contrastive_split = v.get<std::string>();
      else if (k == "id_split") c.id_split = v.get<std::string>();
      else if (k == "checkpoint") c.checkpoint = v.get<std::string>();
      else if (k == "results_dir") c.results_dir = v.get<std::string>();
      else if (k == "regime") c.regime = v.get<std::string>();
      else if (k == "preset") c.preset = v.get<std::string>();
      else if (k == "protocol") c.protocol = v.get<std::string>();
      else if (k == "n_classes") c.n_classes = v.get<std::vector<int>>();
      else if (k == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "n_val_singers") c.n_val_singers = v.get<int>();
      else if (k == "min_tracks") c.min_tracks = v.get<int>();
      else if (k == "vocalness") c.vocalness = v.get<double>();
      else if (k == "min_genre_tracks") c.min_genre_tracks = v.get<int>();
      else if (k == "pretrain") c.pretrain = v;
      else if (k == "probe") c.probe = v;
      else if (k == "catalog") c.catalog = v;
      else throw ConfigError("unknown config key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a wrongly typed value: ") + e.what());
  }
  if (c.protocol != "closed_set" && c.protocol != "cloned") {
    throw ConfigError("protocol must be closed_set or cloned");
  }
  for (const char* key : {"pretrain", "probe", "catalog"}) {
    if (!c.to_json().at(key).is_object()) throw ConfigError(std::string(key) + " must be an object");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json j = {{"manifest", manifest},
            {"contrastive_split", contrastive_split},
            {"id_split", id_split},
            {"checkpoint", checkpoint},
            {"results_dir", results_dir},
            {"regime", regime},
            {"preset", preset},
            {"protocol", protocol},
            {"n_classes", n_classes},
            {"seeds", seeds},
            {"seed", seed},
            {"n_val_singers", n_val_singers},
            {"min_genre_tracks", min_genre_tracks},
            {"pretrain", pretrain},
            {"probe", probe},
            {"catalog", catalog}};
  if (min_tracks) j["min_tracks"] = *min_tracks;
  if (vocalness) j["vocalness"] = *vocalness;
  return j;
}

std::string ExperimentConfig::hash() const { return digest_hex(to_json().dump()); }

json run_metadata(const std::string& command, const ExperimentConfig& config, double wall_time_s) {
  return {{"command", command},
          {"version", kVersion},
          {"config_hash", config.hash()},
          {"seed", config.seed},
          {"seeds", config.seeds},
          {"wall_time_s", wall_time_s},
          {"config", config.to_json()}};
}

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) { return parse_list<std::uint64_t>(text, "seed"); }
std::vector<int> parse_int_list(const std::string& text) { return parse_list<int>(text, "integer"); }

}  // namespace singerlab::cli
