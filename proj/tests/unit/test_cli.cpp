#include "doctest.h"
#include "singerlab/cli/config.hpp"
#include "singerlab/common/error.hpp"

using namespace singerlab;
using namespace singerlab::cli;
using nlohmann::json;

TEST_CASE("experiment config: defaults, round trip, hash") {
  const ExperimentConfig d;
  CHECK(d.regime == "mixture");
  CHECK(d.preset == "desk");
  CHECK(d.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(d.min_genre_tracks == 10);

  const json j = {{"regime", "vocal"}, {"n_classes", {5, 24}}, {"vocalness", 0.6}, {"pretrain", {{"batch_pairs", 8}}}};
  const auto c = ExperimentConfig::from_json(j);
  CHECK(c.regime == "vocal");
  CHECK(c.n_classes == std::vector<int>{5, 24});
  CHECK(*c.vocalness == 0.6);
  CHECK_FALSE(c.min_tracks.has_value());
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash() != d.hash());
  CHECK(c.hash().size() == d.hash().size());
}

TEST_CASE("experiment config: rejects unknown keys, bad types and bad protocols") {
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"sed", 1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"seed", "one"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"protocol", "open"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"probe", 3}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("list parsing") {
  CHECK(parse_seed_list("1,2,3") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(parse_seed_list("7,") == std::vector<std::uint64_t>{7});
  CHECK(parse_int_list("24") == std::vector<int>{24});
  CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("1,x"), ConfigError);
  CHECK_THROWS_AS(parse_int_list("3.5"), ConfigError);
  CHECK_THROWS_AS(parse_int_list("-2"), ConfigError);
}

TEST_CASE("run metadata carries the config hash") {
  ExperimentConfig c;
  c.seed = 9;
  const auto m = run_metadata("pretrain", c, 1.5);
  CHECK(m.at("command") == "pretrain");
  CHECK(m.at("config_hash") == c.hash());
  CHECK(m.at("seed") == 9);
  CHECK(m.at("wall_time_s") == 1.5);
}
