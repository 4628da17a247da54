#include "rankemb/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "rankemb/io.hpp"
#include "rankemb/rng.hpp"

namespace rankemb {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kSystemOrder = {
    "at", "tl-neighbors", "tl-uniform", "tl-distance", "tl-autopool"};

namespace {

constexpr std::uint64_t kSplitStream = 0x73706c6974;      // "split"
constexpr std::uint64_t kMineStream = 0x6d696e65;         // "mine"
constexpr std::uint64_t kTrainStream = 0x747261696e;      // "train"
constexpr std::uint64_t kEvalPatchPurpose = 0x6576616c;   // "eval"

int system_index_of(const std::string& system) {
  for (std::size_t i = 0; i < kSystemOrder.size(); ++i) {
    if (kSystemOrder[i] == system) return static_cast<int>(i);
  }
  throw ValidationError("unknown system '" + system + "'");
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

bool system_is_triplet(const std::string& system) {
  return system.rfind("tl-", 0) == 0 && system_index_of(system) >= 0;
}

MiningStrategy system_strategy(const std::string& system) {
  if (system == "tl-neighbors") return MiningStrategy::kNeighbors;
  if (system == "tl-uniform") return MiningStrategy::kRandomUniform;
  if (system == "tl-distance" || system == "tl-autopool") {
    return MiningStrategy::kDistanceBased;
  }
  throw ValidationError("system '" + system + "' has no mining strategy");
}

ModelConfig system_model(const ExperimentConfig& cfg, const std::string& system) {
  ModelConfig model = cfg.model;
  if (system == "at") {
    model.mode = NetMode::kTag;
    model.temporal_pool = TemporalPool::kMax;
  } else {
    model.mode = NetMode::kEmbed;
    model.temporal_pool = system == "tl-autopool" ? TemporalPool::kAutopool
                                                  : TemporalPool::kMax;
  }
  return model;
}

void ExperimentConfig::validate() const {
  corpus.validate();
  oracle.validate();
  if (oracle.weights.size() != static_cast<std::size_t>(corpus.n_tags)) {
    throw ValidationError("oracle weight count differs from the corpus tag count");
  }
  mining.validate();
  if (mining.n_positives + 1 > corpus.n_tracks - 1) {
    throw ValidationError("n_positives + 1 must not exceed the pool size");
  }
  model.validate();
  if (model.mode != NetMode::kEmbed) {
    throw ValidationError("the model template must be in embedding mode");
  }
  if (model.input_freq_bins != corpus.patch_freq_bins ||
      model.input_frames != corpus.patch_frames) {
    throw ValidationError("model input dimensions differ from the corpus patches");
  }
  if (model.n_tags != corpus.n_tags) {
    throw ValidationError("model tag count differs from the corpus");
  }
  training.validate();
  eval.validate();
  if (!(train_ratio > 0.0) || !(val_ratio > 0.0) || !(test_ratio > 0.0) ||
      std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    throw ValidationError("split ratios must be positive and sum to 1");
  }
  if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0)) {
    throw ValidationError("binarize threshold must lie in (0, 1)");
  }
  if (systems.empty()) throw ValidationError("no systems requested");
  for (std::size_t i = 0; i < systems.size(); ++i) {
    system_index_of(systems[i]);
    for (std::size_t j = i + 1; j < systems.size(); ++j) {
      if (systems[i] == systems[j]) {
        throw ValidationError("duplicate system '" + systems[i] + "'");
      }
    }
  }
  if (out_dir.empty()) throw ValidationError("output directory must be set");
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.model = default_model_config();
  cfg.oracle = uniform_oracle(static_cast<std::size_t>(cfg.corpus.n_tags));
  cfg.corpus.seed = cfg.seed;
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  check_keys(doc,
             {"seed", "out", "corpus", "oracle", "split", "mining", "model",
              "training", "eval", "binarize_threshold", "systems"},
             "config");

  ExperimentConfig cfg = default_experiment_config();
  get_if(doc, "seed", cfg.seed);
  get_if(doc, "out", cfg.out_dir);
  get_if(doc, "binarize_threshold", cfg.binarize_threshold);
  get_if(doc, "systems", cfg.systems);

  cfg.corpus.seed = cfg.seed;
  if (doc.contains("corpus")) {
    const json& c = doc.at("corpus");
    check_keys(c,
               {"n_tracks", "n_tags", "patch_freq_bins", "patch_frames",
                "tags_per_track", "noise_sigma", "n_eval_patches", "seed"},
               "config.corpus");
    get_if(c, "n_tracks", cfg.corpus.n_tracks);
    get_if(c, "n_tags", cfg.corpus.n_tags);
    get_if(c, "patch_freq_bins", cfg.corpus.patch_freq_bins);
    get_if(c, "patch_frames", cfg.corpus.patch_frames);
    if (c.contains("tags_per_track")) {
      const auto range = c.at("tags_per_track").get<std::vector<int>>();
      if (range.size() != 2) {
        throw ValidationError("tags_per_track must be [lo, hi]");
      }
      cfg.corpus.tags_per_track_lo = range[0];
      cfg.corpus.tags_per_track_hi = range[1];
    }
    get_if(c, "noise_sigma", cfg.corpus.noise_sigma);
    get_if(c, "n_eval_patches", cfg.corpus.n_eval_patches);
    get_if(c, "seed", cfg.corpus.seed);
  }

  cfg.oracle = uniform_oracle(static_cast<std::size_t>(cfg.corpus.n_tags));
  if (doc.contains("oracle")) {
    const json& o = doc.at("oracle");
    check_keys(o, {"kind", "weights"}, "config.oracle");
    if (o.contains("kind")) {
      cfg.oracle.kind = oracle_kind_from_string(o.at("kind").get<std::string>());
      cfg.oracle = uniform_oracle(static_cast<std::size_t>(cfg.corpus.n_tags),
                                  cfg.oracle.kind);
    }
    get_if(o, "weights", cfg.oracle.weights);
  }

  if (doc.contains("split")) {
    const json& s = doc.at("split");
    check_keys(s, {"ratios"}, "config.split");
    if (s.contains("ratios")) {
      const auto ratios = s.at("ratios").get<std::vector<double>>();
      if (ratios.size() != 3) throw ValidationError("split ratios must have 3 entries");
      cfg.train_ratio = ratios[0];
      cfg.val_ratio = ratios[1];
      cfg.test_ratio = ratios[2];
    }
  }

  if (doc.contains("mining")) {
    const json& m = doc.at("mining");
    check_keys(m, {"n_positives", "n_negatives"}, "config.mining");
    get_if(m, "n_positives", cfg.mining.n_positives);
    get_if(m, "n_negatives", cfg.mining.n_negatives);
  }

  cfg.model.input_freq_bins = cfg.corpus.patch_freq_bins;
  cfg.model.input_frames = cfg.corpus.patch_frames;
  cfg.model.n_tags = cfg.corpus.n_tags;
  cfg.model.mode = NetMode::kEmbed;
  cfg.model.temporal_pool = TemporalPool::kMax;
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    check_keys(m, {"embedding_dim", "conv", "autopool_shared"}, "config.model");
    get_if(m, "embedding_dim", cfg.model.embedding_dim);
    get_if(m, "autopool_shared", cfg.model.autopool_shared);
    if (m.contains("conv")) {
      cfg.model.conv_layers.clear();
      for (const auto& row : m.at("conv")) {
        const auto vals = row.get<std::vector<int>>();
        if (vals.size() != 5) {
          throw ValidationError("conv rows are [channels, kh, kw, pool_h, pool_w]");
        }
        cfg.model.conv_layers.push_back({vals[0], vals[1], vals[2], vals[3], vals[4]});
      }
    }
  }

  if (doc.contains("training")) {
    const json& t = doc.at("training");
    check_keys(t,
               {"margin", "lr", "batch_triplets", "beta1", "beta2", "epsilon",
                "patience", "max_epochs", "steps_per_epoch"},
               "config.training");
    get_if(t, "margin", cfg.training.margin);
    get_if(t, "lr", cfg.training.adam.lr);
    get_if(t, "batch_triplets", cfg.training.batch_triplets);
    get_if(t, "beta1", cfg.training.adam.beta1);
    get_if(t, "beta2", cfg.training.adam.beta2);
    get_if(t, "epsilon", cfg.training.adam.epsilon);
    get_if(t, "patience", cfg.training.patience);
    get_if(t, "max_epochs", cfg.training.max_epochs);
    get_if(t, "steps_per_epoch", cfg.training.steps_per_epoch);
  }

  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    check_keys(e, {"k", "n_relevant", "gains"}, "config.eval");
    get_if(e, "k", cfg.eval.k);
    get_if(e, "n_relevant", cfg.eval.n_relevant);
    get_if(e, "gains", cfg.eval.gains);
  }

  // Normalize system order to the report order so equal sets serialize equally.
  std::sort(cfg.systems.begin(), cfg.systems.end(),
            [](const std::string& a, const std::string& b) {
              return system_index_of(a) < system_index_of(b);
            });
  cfg.validate();
  return cfg;
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  doc["out"] = cfg.out_dir;
  doc["binarize_threshold"] = cfg.binarize_threshold;
  doc["systems"] = cfg.systems;
  doc["split"]["ratios"] = {cfg.train_ratio, cfg.val_ratio, cfg.test_ratio};

  json& c = doc["corpus"];
  c["n_tracks"] = cfg.corpus.n_tracks;
  c["n_tags"] = cfg.corpus.n_tags;
  c["patch_freq_bins"] = cfg.corpus.patch_freq_bins;
  c["patch_frames"] = cfg.corpus.patch_frames;
  c["tags_per_track"] = {cfg.corpus.tags_per_track_lo, cfg.corpus.tags_per_track_hi};
  c["noise_sigma"] = cfg.corpus.noise_sigma;
  c["n_eval_patches"] = cfg.corpus.n_eval_patches;
  c["seed"] = cfg.corpus.seed;

  json& o = doc["oracle"];
  o["kind"] = to_string(cfg.oracle.kind);
  o["weights"] = cfg.oracle.weights;

  json& m = doc["mining"];
  m["n_positives"] = cfg.mining.n_positives;
  m["n_negatives"] = cfg.mining.n_negatives;

  json& mo = doc["model"];
  mo["embedding_dim"] = cfg.model.embedding_dim;
  mo["autopool_shared"] = cfg.model.autopool_shared;
  mo["conv"] = json::array();
  for (const auto& layer : cfg.model.conv_layers) {
    mo["conv"].push_back(
        {layer.channels, layer.kernel_h, layer.kernel_w, layer.pool_h, layer.pool_w});
  }

  json& t = doc["training"];
  t["margin"] = cfg.training.margin;
  t["lr"] = cfg.training.adam.lr;
  t["batch_triplets"] = cfg.training.batch_triplets;
  t["beta1"] = cfg.training.adam.beta1;
  t["beta2"] = cfg.training.adam.beta2;
  t["epsilon"] = cfg.training.adam.epsilon;
  t["patience"] = cfg.training.patience;
  t["max_epochs"] = cfg.training.max_epochs;
  t["steps_per_epoch"] = cfg.training.steps_per_epoch;

  json& e = doc["eval"];
  e["k"] = cfg.eval.k;
  e["n_relevant"] = cfg.eval.n_relevant;
  e["gains"] = cfg.eval.gains;

  return doc.dump(2) + "\n";
}

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  dir_ = cfg_.out_dir;
  fs::create_directories(dir_);
  config_echo_ = serialize_experiment_config(cfg_);
}

fs::path Experiment::path(const std::string& name) const { return dir_ / name; }

namespace {

// Config keys each stage actually reads. Everything else reaches a stage
// through input files, which are content-hashed, so narrowing the slice keeps
// resumes precise without ever going stale.
std::vector<std::string> stamp_keys(const std::string& stage) {
  if (stage == "generate") return {"corpus"};
  if (stage == "rank") return {"oracle", "split", "seed"};
  if (stage == "mine") return {"mining", "seed", "systems"};
  if (stage.rfind("train-", 0) == 0) {
    return {"training", "model", "seed", "split", "binarize_threshold"};
  }
  if (stage == "embed" || stage == "estimate-tags") return {"split", "seed"};
  if (stage == "evaluate") return {"eval", "oracle", "systems"};
  if (stage == "profile") return {};
  return {};  // report hashes the full echo instead
}

}  // namespace

std::string Experiment::stage_stamp(const std::string& stage,
                                    const std::vector<std::string>& inputs) const {
  std::uint64_t h;
  if (stage == "report") {
    h = fnv1a(config_echo_);
  } else {
    const json doc = json::parse(config_echo_);
    json slice;
    for (const std::string& key : stamp_keys(stage)) slice[key] = doc.at(key);
    h = fnv1a(slice.dump());
  }
  h = fnv1a(stage.data(), stage.size(), h);
  for (const std::string& name : inputs) {
    const fs::path p = dir_ / name;
    if (!fs::exists(p)) {
      throw IoError("stage '" + stage + "' requires '" + name +
                    "'; run the earlier stages first");
    }
    const std::string content = read_text_file(p);
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(content.data(), content.size(), h);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <typename Body>
bool Experiment::run_stage(const std::string& stage,
                           const std::vector<std::string>& inputs,
                           const std::vector<std::string>& outputs, Body body) {
  const std::string stamp = stage_stamp(stage, inputs);
  const fs::path stamp_path = dir_ / (stage + ".stamp");
  bool current = fs::exists(stamp_path) && read_text_file(stamp_path) == stamp + "\n";
  for (const std::string& name : outputs) {
    if (!fs::exists(dir_ / name)) current = false;
  }
  if (current) return false;

  std::error_code ec;
  fs::remove(stamp_path, ec);
  const fs::path fail_path = dir_ / (stage + ".failed");
  fs::remove(fail_path, ec);
  try {
    body();
  } catch (const std::exception& e) {
    write_text_file(fail_path, std::string(e.what()) + "\n");
    throw StateError("stage '" + stage + "': " + e.what());
  }
  write_text_file(stamp_path, stamp + "\n");
  return true;
}

Corpus Experiment::load_corpus() const {
  return read_corpus_manifest(dir_ / "corpus.manifest");
}

Split Experiment::load_split(const Corpus& corpus) const {
  return split_corpus(corpus, cfg_.train_ratio, cfg_.val_ratio, cfg_.test_ratio,
                      seed_mix(cfg_.seed, kSplitStream));
}

bool Experiment::generate() {
  return run_stage(
      "generate", {}, {"corpus.manifest", "patches.f32", "patches.idx"}, [&] {
        const Corpus corpus = generate_corpus(cfg_.corpus);
        write_corpus_manifest(dir_ / "corpus.manifest", corpus);
        std::vector<TrackId> ids;
        std::vector<std::vector<PatchTensor>> patches;
        ids.reserve(corpus.tracks.size());
        patches.reserve(corpus.tracks.size());
        for (const Track& t : corpus.tracks) {
          ids.push_back(t.id);
          patches.push_back(sample_patches(
              t, corpus.prototypes, cfg_.corpus.n_eval_patches,
              cfg_.corpus.noise_sigma, cfg_.corpus.patch_frames,
              track_patch_seed(cfg_.corpus.seed, t.id, kEvalPatchPurpose)));
        }
        write_patches(dir_ / "patches.f32", dir_ / "patches.idx", ids, patches);
      });
}

bool Experiment::rank() {
  return run_stage(
      "rank", {"corpus.manifest"},
      {"rankings-train.txt", "rankings-validation.txt", "rankings-test.txt",
       "rankings-all.txt"},
      [&] {
        const Corpus corpus = load_corpus();
        const Split split = load_split(corpus);
        write_rankings(dir_ / "rankings-train.txt",
                       rank_pool(corpus.tag_map(split.train), cfg_.oracle));
        write_rankings(dir_ / "rankings-validation.txt",
                       rank_pool(corpus.tag_map(split.validation), cfg_.oracle));
        write_rankings(dir_ / "rankings-test.txt",
                       rank_pool(corpus.tag_map(split.test), cfg_.oracle));
        write_rankings(dir_ / "rankings-all.txt",
                       rank_pool(corpus.tag_map(), cfg_.oracle));
      });
}

namespace {

// Strategies needed by the requested systems, in report order, deduplicated.
std::vector<MiningStrategy> needed_strategies(const ExperimentConfig& cfg) {
  std::vector<MiningStrategy> out;
  for (const std::string& system : cfg.systems) {
    if (!system_is_triplet(system)) continue;
    const MiningStrategy s = system_strategy(system);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

}  // namespace

bool Experiment::mine() {
  const auto strategies = needed_strategies(cfg_);
  if (strategies.empty()) return false;
  std::vector<std::string> outputs;
  for (const MiningStrategy s : strategies) {
    outputs.push_back("triplets-train-" + to_string(s) + ".txt");
    outputs.push_back("triplets-val-" + to_string(s) + ".txt");
  }
  return run_stage(
      "mine", {"rankings-train.txt", "rankings-validation.txt"}, outputs, [&] {
        const auto train_rankings = read_rankings(dir_ / "rankings-train.txt");
        const auto val_rankings = read_rankings(dir_ / "rankings-validation.txt");
        for (const MiningStrategy s : strategies) {
          const auto ordinal = static_cast<std::uint64_t>(s);
          MiningConfig mc = cfg_.mining;
          mc.strategy = s;
          mc.seed = seed_mix(seed_mix(cfg_.seed, kMineStream), 2 * ordinal);
          const MiningResult train_result = mine_triplets(train_rankings, mc);
          write_triplets(dir_ / ("triplets-train-" + to_string(s) + ".txt"),
                         train_result.triplets, s, mc);
          mc.seed = seed_mix(seed_mix(cfg_.seed, kMineStream), 2 * ordinal + 1);
          const MiningResult val_result = mine_triplets(val_rankings, mc);
          write_triplets(dir_ / ("triplets-val-" + to_string(s) + ".txt"),
                         val_result.triplets, s, mc);
          if (train_result.truncated_pairs || val_result.truncated_pairs) {
            std::cerr << "rankemb: note: " << to_string(s) << " mining truncated "
                      << train_result.truncated_pairs << " train / "
                      << val_result.truncated_pairs << " validation pairs\n";
          }
        }
      });
}

bool Experiment::train_system(const std::string& system, int system_index) {
  std::vector<std::string> inputs = {"corpus.manifest"};
  if (system_is_triplet(system)) {
    const std::string strategy = to_string(system_strategy(system));
    inputs.push_back("triplets-train-" + strategy + ".txt");
    inputs.push_back("triplets-val-" + strategy + ".txt");
  }
  return run_stage(
      "train-" + system, inputs, {system + ".params", system + ".loss"}, [&] {
        const Corpus corpus = load_corpus();
        TrainConfig tcfg = cfg_.training;
        tcfg.seed = seed_mix(seed_mix(cfg_.seed, kTrainStream),
                             static_cast<std::uint64_t>(system_index));
        const ModelConfig model = system_model(cfg_, system);
        TrainResult result;
        if (system_is_triplet(system)) {
          const std::string strategy = to_string(system_strategy(system));
          const auto train_trips =
              read_triplets(dir_ / ("triplets-train-" + strategy + ".txt"));
          const auto val_trips =
              read_triplets(dir_ / ("triplets-val-" + strategy + ".txt"));
          result = train_triplet(corpus, train_trips, val_trips, model, tcfg);
        } else {
          const Split split = load_split(corpus);
          result = train_tagger(corpus, split, cfg_.binarize_threshold, model, tcfg);
        }
        write_params(dir_ / (system + ".params"), model, result.params);
        write_loss_curve(dir_ / (system + ".loss"), result.report);
      });
}

bool Experiment::train() {
  bool ran = false;
  for (const std::string& system : cfg_.systems) {
    if (train_system(system, system_index_of(system))) ran = true;
  }
  return ran;
}

bool Experiment::embed() {
  std::vector<std::string> systems;
  for (const std::string& system : cfg_.systems) {
    if (system_is_triplet(system)) systems.push_back(system);
  }
  if (systems.empty()) return false;
  std::vector<std::string> inputs = {"corpus.manifest", "patches.f32", "patches.idx"};
  std::vector<std::string> outputs;
  for (const std::string& system : systems) {
    inputs.push_back(system + ".params");
    outputs.push_back(system + ".embeddings");
  }
  return run_stage("embed", inputs, outputs, [&] {
    const Corpus corpus = load_corpus();
    const Split split = load_split(corpus);
    const auto patches = read_patches(dir_ / "patches.f32", dir_ / "patches.idx");
    for (const std::string& system : systems) {
      const ParamsFile pf = read_params(dir_ / (system + ".params"));
      const Net net(pf.config);
      std::map<TrackId, std::vector<double>> embeddings;
      for (const TrackId id : split.test) {
        const auto it = patches.find(id);
        if (it == patches.end()) {
          throw IoError("no stored patches for track " + std::to_string(id));
        }
        embeddings[id] = mean_forward(net, pf.params, it->second);
      }
      write_vectors(dir_ / (system + ".embeddings"), "embeddings", embeddings);
    }
  });
}

bool Experiment::estimate_tags() {
  if (std::find(cfg_.systems.begin(), cfg_.systems.end(), "at") ==
      cfg_.systems.end()) {
    return false;
  }
  return run_stage(
      "estimate-tags",
      {"corpus.manifest", "patches.f32", "patches.idx", "at.params"},
      {"at.estimates"}, [&] {
        const Corpus corpus = load_corpus();
        const Split split = load_split(corpus);
        const auto patches = read_patches(dir_ / "patches.f32", dir_ / "patches.idx");
        const ParamsFile pf = read_params(dir_ / "at.params");
        const Net net(pf.config);
        std::map<TrackId, std::vector<double>> estimates;
        for (const TrackId id : split.test) {
          const auto it = patches.find(id);
          if (it == patches.end()) {
            throw IoError("no stored patches for track " + std::to_string(id));
          }
          estimates[id] = mean_forward(net, pf.params, it->second);
        }
        write_vectors(dir_ / "at.estimates", "estimates", estimates);
      });
}

bool Experiment::evaluate() {
  std::vector<std::string> inputs = {"rankings-test.txt"};
  std::vector<std::string> outputs;
  for (const std::string& system : cfg_.systems) {
    inputs.push_back(system +
                     (system_is_triplet(system) ? ".embeddings" : ".estimates"));
    outputs.push_back(system + ".metrics.txt");
    outputs.push_back(system + ".metrics.json");
  }
  return run_stage("evaluate", inputs, outputs, [&] {
    const auto ground_truth = read_rankings(dir_ / "rankings-test.txt");
    for (const std::string& system : cfg_.systems) {
      MetricsReport report;
      if (system_is_triplet(system)) {
        const auto features =
            read_vectors(dir_ / (system + ".embeddings"), "embeddings");
        report = evaluate_system(features, ground_truth, cfg_.eval,
                                 EvalMode::kEmbedding);
      } else {
        const auto features = read_vectors(dir_ / "at.estimates", "estimates");
        report = evaluate_system(features, ground_truth, cfg_.eval,
                                 EvalMode::kTagOracle, cfg_.oracle);
      }
      write_metrics_text(dir_ / (system + ".metrics.txt"), report);
      write_metrics_json(dir_ / (system + ".metrics.json"), report);
    }
  });
}

bool Experiment::profile() {
  return run_stage("profile", {"rankings-all.txt"}, {"profile.txt"}, [&] {
    write_profile(dir_ / "profile.txt",
                  similarity_profile(read_rankings(dir_ / "rankings-all.txt")));
  });
}

bool Experiment::report() {
  profile();

  std::vector<std::string> inputs = {"profile.txt"};
  const bool has_at = std::find(cfg_.systems.begin(), cfg_.systems.end(), "at") !=
                      cfg_.systems.end();
  std::vector<std::string> missing;
  for (const std::string& system : cfg_.systems) {
    for (const std::string suffix : {".metrics.json", ".loss"}) {
      const std::string name = system + suffix;
      if (!fs::exists(dir_ / name)) missing.push_back(name);
      inputs.push_back(name);
    }
  }
  if (has_at) {
    for (const std::string name : {"at.estimates", "corpus.manifest"}) {
      if (!fs::exists(dir_ / name)) missing.push_back(name);
      inputs.push_back(name);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& name : missing) list += (list.empty() ? "" : ", ") + name;
    throw ValidationError("report inputs missing: " + list);
  }

  return run_stage("report", inputs, {"report.txt", "report.json"}, [&] {
    json doc;
    doc["version"] = kVersion;
    doc["config"] = json::parse(config_echo_);

    std::ostringstream text;
    text << "rankemb report 1\n\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-14s %-17s%-17s%-17s%-17s\n", "system",
                  "map", "recall", "rr", "ndcg");
    text << buf;
    for (const std::string& system : cfg_.systems) {
      const MetricsReport metrics =
          read_metrics_json(dir_ / (system + ".metrics.json"));
      std::snprintf(buf, sizeof(buf), "%-14s ", system.c_str());
      text << buf;
      for (const auto& m : metrics.metrics) {
        std::snprintf(buf, sizeof(buf), "%6.2f +- %5.2f  ", m.stat.mean_x100,
                      m.stat.halfwidth_x100);
        text << buf;
      }
      text << "\n";
      json row;
      row["n_queries"] = metrics.n_queries;
      for (const auto& m : metrics.metrics) {
        row[m.name]["mean_x100"] = m.stat.mean_x100;
        row[m.name]["halfwidth_x100"] = m.stat.halfwidth_x100;
      }
      doc["systems"][system] = row;
    }

    if (has_at) {
      const Corpus corpus = load_corpus();
      const Split split = load_split(corpus);
      const auto estimates = read_vectors(dir_ / "at.estimates", "estimates");
      std::vector<TagVector> est_rows;
      std::vector<std::vector<int>> truth_rows;
      for (const TrackId id : split.test) {
        est_rows.push_back(estimates.at(id));
        truth_rows.push_back(
            binarize_tags(corpus.track(id).tags, cfg_.binarize_threshold));
      }
      const AucReport auc = mean_auc(est_rows, truth_rows);
      text << "\nat mean-auc " << format_fixed(auc.mean_auc, 4) << " (tags skipped "
           << auc.skipped.size() << ")\n";
      doc["at_auc"] = auc.mean_auc;
      doc["at_auc_skipped_tags"] = auc.skipped;
    }

    text << "\ntraining:\n";
    for (const std::string& system : cfg_.systems) {
      const TrainReport tr = read_loss_curve(dir_ / (system + ".loss"));
      text << "  " << system << ": best_epoch " << tr.best_epoch
           << " stopped_epoch " << tr.stopped_epoch << " best_val_loss "
           << format_fixed(tr.best_val_loss, 6) << "\n";
      json trj;
      trj["best_epoch"] = tr.best_epoch;
      trj["stopped_epoch"] = tr.stopped_epoch;
      trj["best_val_loss"] = tr.best_val_loss;
      trj["epochs_run"] = tr.history.size();
      doc["training"][system] = trj;
    }

    const auto profile_data = read_profile(dir_ / "profile.txt");
    doc["profile"] = profile_data;
    text << "\nsimilarity profile: " << profile_data.size() << " ranks, max "
         << format_fixed(profile_data.front(), 6) << ", tail "
         << format_fixed(profile_data.back(), 6) << " (profile.txt)\n";

    text << "\nconfig:\n" << config_echo_;

    write_text_file(dir_ / "report.txt", text.str());
    write_text_file(dir_ / "report.json", doc.dump(2) + "\n");
  });
}

void Experiment::run() {
  generate();
  rank();
  mine();
  train();
  embed();
  estimate_tags();
  evaluate();
  profile();
  report();
}

void run_experiment(const ExperimentConfig& cfg) { Experiment(cfg).run(); }

}  // namespace rankemb
