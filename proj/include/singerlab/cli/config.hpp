#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace singerlab::cli {

// One config file shared by all commands; command-line flags override it.
struct ExperimentConfig {
  std::string manifest;
  std::string contrastive_split;
  std::string id_split;
  std::string checkpoint;
  std::string results_dir;
  std::string regime = "mixture";
  std::string preset = "desk";
  std::string protocol = "closed_set";
  std::vector<int> n_classes;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::uint64_t seed = 1;
  int n_val_singers = 16;
  std::optional<int> min_tracks;
  std::optional<double> vocalness;
  int min_genre_tracks = 10;
  nlohmann::json pretrain = nlohmann::json::object();  // PretrainConfig overrides
  nlohmann::json probe = nlohmann::json::object();     // batch_size, lr, train_iters, val_iters, max_epochs
  nlohmann::json catalog = nlohmann::json::object();   // CatalogConfig keys

  // Throws ConfigError on unknown keys or wrong types.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  std::string hash() const;
};

// Run metadata written next to a command's artifacts.
nlohmann::json run_metadata(const std::string& command, const ExperimentConfig& config, double wall_time_s);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace singerlab::cli
