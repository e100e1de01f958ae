#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "singerlab/cli/config.hpp"
#include "singerlab/common/error.hpp"
#include "singerlab/common/io.hpp"
#include "singerlab/contrastive/pretrain.hpp"
#include "singerlab/data/splits.hpp"
#include "singerlab/experiments/experiments.hpp"
#include "singerlab/synth/catalog.hpp"
#include "singerlab/version.hpp"

namespace fs = std::filesystem;
using namespace singerlab;
using nlohmann::json;

namespace {

struct Flags {
  std::string config_path;
  std::string manifest, contrastive_split, id_split, checkpoint, results_dir, out;
  std::string regime, preset, protocol, seeds, n_classes, mode, list;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_val, min_tracks, batch_pairs, max_epochs, probe_max_epochs, min_genre_tracks;
  std::optional<double> vocalness, lr;
  bool fig5 = false, breakdown = false, quiet = false;
  int jobs = 1;
};

cli::ExperimentConfig effective_config(const Flags& f) {
  cli::ExperimentConfig c = f.config_path.empty() ? cli::ExperimentConfig{} : cli::ExperimentConfig::load(f.config_path);
  if (!f.manifest.empty()) c.manifest = f.manifest;
  if (!f.contrastive_split.empty()) c.contrastive_split = f.contrastive_split;
  if (!f.id_split.empty()) c.id_split = f.id_split;
  if (!f.checkpoint.empty()) c.checkpoint = f.checkpoint;
  if (!f.results_dir.empty()) c.results_dir = f.results_dir;
  if (!f.regime.empty()) c.regime = f.regime;
  if (!f.preset.empty()) c.preset = f.preset;
  if (!f.protocol.empty()) c.protocol = f.protocol;
  if (!f.seeds.empty()) c.seeds = cli::parse_seed_list(f.seeds);
  if (!f.n_classes.empty()) c.n_classes = cli::parse_int_list(f.n_classes);
  if (f.seed) c.seed = *f.seed;
  if (f.n_val) c.n_val_singers = *f.n_val;
  if (f.min_tracks) c.min_tracks = *f.min_tracks;
  if (f.vocalness) c.vocalness = *f.vocalness;
  if (f.min_genre_tracks) c.min_genre_tracks = *f.min_genre_tracks;
  if (f.batch_pairs) c.pretrain["batch_pairs"] = *f.batch_pairs;
  if (f.max_epochs) c.pretrain["max_epochs"] = *f.max_epochs;
  if (f.lr) c.pretrain["lr"] = *f.lr;
  if (f.probe_max_epochs) c.probe["max_epochs"] = *f.probe_max_epochs;
  return cli::ExperimentConfig::from_json(c.to_json());  // re-validate after overrides
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required setting ") + flag);
}

void require_file(const std::string& path, const char* flag, const char* producer) {
  require(path, flag);
  if (!fs::exists(path)) throw MissingArtifactError(path, producer);
}

void write_json(const fs::path& p, const json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

contrastive::Regime parse_regime(const std::string& s) {
  try {
    return contrastive::regime_from_string(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

probe::ProbeConfig probe_config(const json& j) {
  probe::ProbeConfig p;
  for (const auto& [k, v] : j.items()) {
    if (k == "batch_size") p.batch_size = v.get<int>();
    else if (k == "lr") p.lr = v.get<double>();
    else if (k == "train_iters") p.train_iters = v.get<int>();
    else if (k == "val_iters") p.val_iters = v.get<int>();
    else if (k == "max_epochs") p.max_epochs = v.get<int>();
    else throw ConfigError("unknown probe key '" + k + "'");
  }
  if (p.batch_size < 1 || !(p.lr > 0) || p.train_iters < 1 || p.val_iters < 1 || p.max_epochs < 0) {
    throw ConfigError("probe settings must be positive");
  }
  return p;
}

contrastive::PretrainConfig pretrain_config(const cli::ExperimentConfig& c) {
  json j = c.pretrain;
  j["regime"] = c.regime;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  parse_regime(c.regime);
  try {
    return contrastive::PretrainConfig::from_json(j);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string run_name(const std::string& protocol, int n_classes, std::uint64_t seed) {
  return protocol + "_n" + std::to_string(n_classes) + "_s" + std::to_string(seed);
}

struct Loaded {
  synth::CatalogManifest manifest;
  data::SplitSpec split;
};

Loaded load_id_inputs(const cli::ExperimentConfig& c) {
  require_file(c.manifest, "--manifest", "catalog build");
  require_file(c.id_split, "--id-split", "splits build --mode id");
  Loaded l;
  l.manifest = synth::read_manifest(c.manifest);
  l.split = data::split_from_json(read_file(c.id_split));
  if (l.split.mode != "id") throw ConfigError("--id-split is not an identification split");
  return l;
}

contrastive::LoadedEncoder load_encoder(const cli::ExperimentConfig& c) {
  require(c.checkpoint, "--checkpoint");
  return contrastive::encoder_from_checkpoint(nn::load_checkpoint(c.checkpoint, "pretrain"));
}

// ---- commands ---------------------------------------------------------

void cmd_catalog_build(const cli::ExperimentConfig& c, const Flags& f) {
  require(f.out, "--out");
  synth::CatalogConfig cc;
  try {
    cc = synth::CatalogConfig::from_json_text(c.catalog.dump());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto m = synth::build_catalog(cc, c.seed, f.out, f.jobs);
  write_file_atomic(fs::path(f.out) / "catalog_config.json", cc.to_json_text());
  log_info("catalog: " + std::to_string(m.entries.size()) + " tracks in " + f.out);
}

void cmd_catalog_ingest(const Flags& f) {
  require(f.out, "--out");
  require_file(f.list, "--list", "(an external track list)");
  const auto m = synth::ingest_external(f.list, f.out);
  log_info("ingest: " + std::to_string(m.entries.size()) + " tracks in " + f.out);
}

void cmd_splits_impl(const cli::ExperimentConfig& c, const Flags& f);

void cmd_splits(const cli::ExperimentConfig& c, const Flags& f) {
  try {
    cmd_splits_impl(c, f);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void cmd_splits_impl(const cli::ExperimentConfig& c, const Flags& f) {
  require_file(c.manifest, "--manifest", "catalog build");
  require(f.out, "--out");
  const auto m = synth::read_manifest(c.manifest);
  data::SplitSpec split;
  if (f.mode == "contrastive") {
    std::vector<synth::CatalogEntry> pool;
    for (const auto& e : m.entries) {
      if (e.pool == synth::Pool::kContrastive) pool.push_back(e);
    }
    auto kept = data::filter_vocalness(pool, c.vocalness.value_or(data::kTrainingVocalness));
    kept = data::filter_min_tracks(kept, c.min_tracks.value_or(data::kContrastiveMinTracks));
    split = data::build_contrastive_split(kept, c.n_val_singers, c.seed);
  } else if (f.mode == "id") {
    std::vector<synth::CatalogEntry> real, clones;
    for (const auto& e : m.entries) {
      if (e.is_clone) clones.push_back(e);
      else if (e.pool == synth::Pool::kIdentification || e.pool == synth::Pool::kExternal) real.push_back(e);
    }
    auto kept = data::filter_vocalness(real, c.vocalness.value_or(data::kOpenSetVocalness));
    kept = data::filter_min_tracks(kept, c.min_tracks.value_or(data::kClosedSetMinTracks));
    kept.insert(kept.end(), clones.begin(), clones.end());
    split = data::build_id_split(kept, c.seed);
  } else {
    throw ConfigError("--mode must be contrastive or id");
  }
  if (const auto problems = data::validate_split(split, m); !problems.empty()) {
    throw RuntimeFailure("split failed validation: " + problems.front());
  }
  write_file_atomic(f.out, data::split_to_json(split));
  log_info("splits: " + std::to_string(split.assignments.size()) + " tracks assigned -> " + f.out);
}

void cmd_pretrain(const cli::ExperimentConfig& c) {
  const auto cfg = pretrain_config(c);
  require_file(c.manifest, "--manifest", "catalog build");
  require_file(c.contrastive_split, "--contrastive-split", "splits build --mode contrastive");
  require(c.checkpoint, "--checkpoint");
  const auto m = synth::read_manifest(c.manifest);
  const auto split = data::split_from_json(read_file(c.contrastive_split));
  if (split.mode != "contrastive") throw ConfigError("--contrastive-split is not a contrastive split");
  data::MelStore store(m, fs::path(c.manifest).parent_path());
  const auto r = contrastive::pretrain(cfg, store, split);
  nn::save_checkpoint(c.checkpoint, contrastive::pretrain_checkpoint(r, cfg));
  write_file_atomic(c.checkpoint + ".history.csv", contrastive::history_csv(r.history));
  if (r.stop_reason == "diverged") {
    throw RuntimeFailure("training diverged; last good parameters saved to " + c.checkpoint);
  }
}

experiments::Context make_context(const cli::ExperimentConfig& c, Loaded& l, experiments::EmbeddingBank& bank,
                                  contrastive::Regime regime) {
  experiments::Context ctx;
  ctx.manifest = &l.manifest;
  ctx.split = &l.split;
  ctx.regime = regime;
  ctx.bank = &bank;
  ctx.probe = probe_config(c.probe);
  return ctx;
}

void check_results_args(const cli::ExperimentConfig& c) {
  require(c.results_dir, "--results");
  if (c.n_classes.empty()) throw ConfigError("--n-classes is required");
  if (c.seeds.empty()) throw ConfigError("--seeds is required");
}

void cmd_probe(const cli::ExperimentConfig& c) {
  check_results_args(c);
  auto l = load_id_inputs(c);
  auto enc = load_encoder(c);
  data::MelStore store(l.manifest, fs::path(c.manifest).parent_path());
  experiments::EmbeddingBank bank(enc.config, enc.params, store);
  const auto frozen = bank.params().checksum();
  auto ctx = make_context(c, l, bank, enc.regime);
  const bool cloned = c.protocol == "cloned";
  const auto pool = experiments::id_singers(l.split, l.manifest).size();
  for (int n : c.n_classes) {
    if (n < 2 || static_cast<std::size_t>(n) > pool) {
      throw ConfigError("--n-classes " + std::to_string(n) + " outside [2, " + std::to_string(pool) + "]");
    }
  }
  for (int n : c.n_classes) {
    for (auto seed : c.seeds) {
      const auto run = experiments::train_run(ctx, n, seed, cloned);
      nn::save_checkpoint(fs::path(c.results_dir) / "probes" / (run_name(c.protocol, n, seed) + ".ckpt"),
                          experiments::probe_checkpoint(run, enc.regime));
    }
  }
  if (bank.params().checksum() != frozen) throw RuntimeFailure("encoder parameters changed during probing");
}

void cmd_eval(const cli::ExperimentConfig& c) {
  check_results_args(c);
  auto l = load_id_inputs(c);
  const fs::path dir = c.results_dir;
  std::vector<std::pair<std::string, experiments::TrainedRun>> runs;
  for (int n : c.n_classes) {
    for (auto seed : c.seeds) {
      const auto name = run_name(c.protocol, n, seed);
      runs.emplace_back(name, experiments::probe_from_checkpoint(nn::load_checkpoint(dir / "probes" / (name + ".ckpt"), "probe")));
    }
  }
  auto enc = load_encoder(c);
  data::MelStore store(l.manifest, fs::path(c.manifest).parent_path());
  experiments::EmbeddingBank bank(enc.config, enc.params, store);
  auto ctx = make_context(c, l, bank, enc.regime);
  std::map<int, std::vector<experiments::RunResult>> by_n;
  for (const auto& [name, run] : runs) {
    const auto out = experiments::score_run(ctx, run);
    write_json(dir / "runs" / (name + ".json"), out.result.to_json());
    write_file_atomic(dir / "predictions" / (name + ".csv"), out.predictions_csv);
    by_n[run.n_classes].push_back(out.result);
  }
  for (const auto& [n, results] : by_n) {
    write_file_atomic(dir / ("aggregate_" + c.protocol + "_n" + std::to_string(n) + ".csv"),
                      experiments::aggregate_csv(results));
  }
}

void cmd_analyze(const cli::ExperimentConfig& c, const Flags& f) {
  if (f.fig5 == f.breakdown) throw ConfigError("analyze needs exactly one of --fig5 or --breakdown");
  require(c.results_dir, "--results");
  const fs::path dir = c.results_dir;
  if (f.fig5) {
    auto l = load_id_inputs(c);
    auto enc = load_encoder(c);
    data::MelStore store(l.manifest, fs::path(c.manifest).parent_path());
    experiments::EmbeddingBank bank(enc.config, enc.params, store);
    json per_seed = json::object();
    std::map<std::string, double> mean;
    for (auto seed : c.seeds) {
      const auto prof = experiments::cosine_reference_analysis(l.manifest, l.split, bank, enc.regime, seed);
      per_seed[std::to_string(seed)] = prof;
      for (const auto& [k, v] : prof) mean[k] += v / static_cast<double>(c.seeds.size());
    }
    write_json(dir / "cosine_profile.json", mean);
    write_json(dir / "cosine_profile_runs.json",
               {{"regime", contrastive::to_string(enc.regime)}, {"per_seed", per_seed}});
    return;
  }
  std::vector<experiments::RunResult> results;
  const fs::path runs_dir = dir / "runs";
  if (!fs::exists(runs_dir)) throw MissingArtifactError(runs_dir.string(), "eval");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs_dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    auto r = experiments::RunResult::from_json(json::parse(read_file(p)));
    if (r.protocol == c.protocol) results.push_back(std::move(r));
  }
  if (results.empty()) throw MissingArtifactError((runs_dir / (c.protocol + "_*.json")).string(), "eval");
  const auto files_out = experiments::breakdown_reports(results, c.min_genre_tracks);
  experiments::write_breakdown(files_out, dir / "breakdown");
  for (const auto& g : files_out.omitted_genres) {
    log_info("breakdown: genre '" + g + "' omitted (fewer than " + std::to_string(c.min_genre_tracks) +
             " test tracks)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"singerlab: contrastive singer embeddings, probes and evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags f;
  app.add_flag("--quiet", f.quiet, "Only warnings and errors on stderr");
  app.add_option("--jobs", f.jobs, "Worker threads where supported")->check(CLI::PositiveNumber);

  auto common = [&](CLI::App* cmd) { cmd->add_option("--config", f.config_path, "Experiment config (JSON)"); };
  auto add_paths = [&](CLI::App* cmd, bool id, bool ckpt, bool results) {
    cmd->add_option("--manifest", f.manifest, "Catalog manifest.jsonl");
    if (id) cmd->add_option("--id-split", f.id_split, "Identification split JSON");
    if (ckpt) cmd->add_option("--checkpoint", f.checkpoint, "Pretrained encoder checkpoint");
    if (results) cmd->add_option("--results", f.results_dir, "Results directory");
  };

  auto* catalog = app.add_subcommand("catalog", "Synthetic catalog generation and external ingestion");
  catalog->require_subcommand(1);
  auto* cat_build = catalog->add_subcommand("build", "Render a synthetic catalog");
  common(cat_build);
  cat_build->add_option("--out", f.out, "Output directory")->required();
  cat_build->add_option("--seed", f.seed, "Master seed");
  auto* cat_ingest = catalog->add_subcommand("ingest", "Ingest external audio listed in a JSON-lines file");
  cat_ingest->add_option("--list", f.list, "JSON-lines track list")->required();
  cat_ingest->add_option("--out", f.out, "Output directory")->required();

  auto* splits = app.add_subcommand("splits", "Dataset splits");
  splits->require_subcommand(1);
  auto* sp_build = splits->add_subcommand("build", "Filter a manifest and build a split");
  common(sp_build);
  sp_build->add_option("--manifest", f.manifest, "Catalog manifest.jsonl");
  sp_build->add_option("--mode", f.mode, "contrastive or id")->required()->check(CLI::IsMember({"contrastive", "id"}));
  sp_build->add_option("--seed", f.seed, "Split seed");
  sp_build->add_option("--out", f.out, "Output split JSON")->required();
  sp_build->add_option("--n-val", f.n_val, "Contrastive validation singers");
  sp_build->add_option("--min-tracks", f.min_tracks, "Minimum tracks per singer");
  sp_build->add_option("--vocalness", f.vocalness, "Minimum vocal fraction");

  auto* pre = app.add_subcommand("pretrain", "Contrastive pretraining of the encoder");
  common(pre);
  pre->add_option("--manifest", f.manifest, "Catalog manifest.jsonl");
  pre->add_option("--contrastive-split", f.contrastive_split, "Contrastive split JSON");
  pre->add_option("--checkpoint", f.checkpoint, "Output checkpoint path");
  pre->add_option("--regime", f.regime, "mixture, vocal or hybrid");
  pre->add_option("--preset", f.preset, "desk or paper");
  pre->add_option("--seed", f.seed, "Training seed");
  pre->add_option("--batch-pairs", f.batch_pairs, "Positive pairs per batch");
  pre->add_option("--max-epochs", f.max_epochs, "Epoch cap (0: plateau rule only)");
  pre->add_option("--lr", f.lr, "Initial learning rate");

  auto* prb = app.add_subcommand("probe", "Train identification probes on a frozen encoder");
  common(prb);
  add_paths(prb, true, true, true);
  prb->add_option("--n-classes", f.n_classes, "Comma-separated class counts");
  prb->add_option("--seeds", f.seeds, "Comma-separated run seeds");
  prb->add_option("--protocol", f.protocol, "closed_set or cloned");
  prb->add_option("--probe-max-epochs", f.probe_max_epochs, "Probe epoch cap (0: plateau rule only)");

  auto* ev = app.add_subcommand("eval", "Score trained probes on test or clone tracks");
  common(ev);
  add_paths(ev, true, true, true);
  ev->add_option("--n-classes", f.n_classes, "Comma-separated class counts");
  ev->add_option("--seeds", f.seeds, "Comma-separated run seeds");
  ev->add_option("--protocol", f.protocol, "closed_set or cloned");

  auto* an = app.add_subcommand("analyze", "Cosine reference profile or genre / bucket breakdowns");
  common(an);
  add_paths(an, true, true, true);
  an->add_flag("--fig5", f.fig5, "Cosine similarity of test embeddings against five reference sets");
  an->add_flag("--breakdown", f.breakdown, "Genre and training-track-count tables and plots");
  an->add_option("--seeds", f.seeds, "Comma-separated seeds");
  an->add_option("--protocol", f.protocol, "Protocol of the runs to break down");
  an->add_option("--min-genre-tracks", f.min_genre_tracks, "Omit genres with fewer test tracks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_log_quiet(f.quiet);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto c = effective_config(f);
    std::string command;
    fs::path meta_dir;
    if (cat_build->parsed()) {
      command = "catalog build";
      cmd_catalog_build(c, f);
      meta_dir = f.out;
    } else if (cat_ingest->parsed()) {
      command = "catalog ingest";
      cmd_catalog_ingest(f);
      meta_dir = f.out;
    } else if (sp_build->parsed()) {
      command = "splits build";
      cmd_splits(c, f);
      meta_dir = fs::path(f.out).parent_path();
    } else if (pre->parsed()) {
      command = "pretrain";
      cmd_pretrain(c);
      meta_dir = fs::path(c.checkpoint).parent_path();
    } else if (prb->parsed()) {
      command = "probe";
      cmd_probe(c);
      meta_dir = c.results_dir;
    } else if (ev->parsed()) {
      command = "eval";
      cmd_eval(c);
      meta_dir = c.results_dir;
    } else if (an->parsed()) {
      command = "analyze";
      cmd_analyze(c, f);
      meta_dir = c.results_dir;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string stem = command;
    std::replace(stem.begin(), stem.end(), ' ', '_');
    if (pre->parsed()) stem = "pretrain_" + fs::path(c.checkpoint).stem().string();
    if (sp_build->parsed()) stem = "splits_" + fs::path(f.out).stem().string();
    if (prb->parsed() || ev->parsed()) stem += "_" + c.protocol;
    if (an->parsed()) stem += f.fig5 ? "_fig5" : "_breakdown";
    write_json((meta_dir.empty() ? fs::path(".") : meta_dir) / "run_meta" / (stem + ".json"),
               cli::run_metadata(command, c, wall));
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return 2;
  } catch (const MissingArtifactError& e) {
    std::cerr << "error[missing-artifact]: " << e.what() << "\n";
    return 3;
  } catch (const RuntimeFailure& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error[config]: malformed JSON input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return 4;
  }
}
