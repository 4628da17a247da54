#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "rankemb/experiment.hpp"
#include "rankemb/io.hpp"

using namespace rankemb;
namespace fs = std::filesystem;

namespace {

// A complete experiment small enough to run in well under a second.
ExperimentConfig micro_config(const fs::path& out_dir) {
  ExperimentConfig cfg = default_experiment_config();
  cfg.corpus = testutil::tiny_corpus_config();
  cfg.corpus.n_tracks = 30;
  cfg.seed = 11;
  cfg.corpus.seed = 11;
  cfg.oracle = uniform_oracle(static_cast<std::size_t>(cfg.corpus.n_tags));
  cfg.mining.n_positives = 2;
  cfg.mining.n_negatives = 3;
  cfg.model = testutil::tiny_model_config();
  cfg.training.adam.lr = 1e-3;
  cfg.training.batch_triplets = 4;
  cfg.training.max_epochs = 2;
  cfg.training.patience = 2;
  cfg.training.steps_per_epoch = 2;
  cfg.eval.k = 5;
  cfg.eval.n_relevant = 3;
  cfg.eval.gains = {3.0, 2.0, 1.0};
  cfg.systems = {"at", "tl-distance"};
  cfg.out_dir = out_dir.string();
  return cfg;
}

void patch_file(const fs::path& path, const std::string& from, const std::string& to) {
  std::string text = read_text_file(path);
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, from.size(), to);
  write_text_file(path, text);
}

}  // namespace

TEST_CASE("system helpers map names to models and strategies") {
  const ExperimentConfig cfg = default_experiment_config();

  CHECK_FALSE(system_is_triplet("at"));
  CHECK(system_is_triplet("tl-neighbors"));
  CHECK(system_is_triplet("tl-autopool"));

  CHECK(system_model(cfg, "at").mode == NetMode::kTag);
  CHECK(system_model(cfg, "at").temporal_pool == TemporalPool::kMax);
  CHECK(system_model(cfg, "tl-distance").mode == NetMode::kEmbed);
  CHECK(system_model(cfg, "tl-distance").temporal_pool == TemporalPool::kMax);
  CHECK(system_model(cfg, "tl-autopool").temporal_pool == TemporalPool::kAutopool);

  CHECK(system_strategy("tl-neighbors") == MiningStrategy::kNeighbors);
  CHECK(system_strategy("tl-uniform") == MiningStrategy::kRandomUniform);
  CHECK(system_strategy("tl-distance") == MiningStrategy::kDistanceBased);
  CHECK(system_strategy("tl-autopool") == MiningStrategy::kDistanceBased);
  CHECK_THROWS_AS(system_strategy("at"), ValidationError);

  CHECK(kSystemOrder == std::vector<std::string>{"at", "tl-neighbors", "tl-uniform",
                                                 "tl-distance", "tl-autopool"});
}

TEST_CASE("config files load with defaults, overrides, and canonical order") {
  testutil::TempDir dir("exp-config");
  const auto path = dir.file("config.json");

  SUBCASE("overrides land and systems are normalized to report order") {
    write_text_file(path, R"({
      "seed": 42,
      "out": "runs/x",
      "corpus": {"n_tracks": 40, "n_tags": 8, "tags_per_track": [2, 4]},
      "training": {"lr": 0.002, "max_epochs": 7},
      "systems": ["tl-autopool", "at", "tl-distance"]
    })");
    const ExperimentConfig cfg = load_experiment_config(path);
    CHECK(cfg.seed == 42);
    CHECK(cfg.out_dir == "runs/x");
    CHECK(cfg.corpus.n_tracks == 40);
    CHECK(cfg.corpus.n_tags == 8);
    CHECK(cfg.corpus.seed == 42);  // follows the global seed unless pinned
    CHECK(cfg.oracle.weights.size() == 8);
    CHECK(cfg.training.adam.lr == 0.002);
    CHECK(cfg.training.max_epochs == 7);
    CHECK(cfg.model.input_freq_bins == cfg.corpus.patch_freq_bins);
    CHECK(cfg.model.n_tags == 8);
    CHECK(cfg.systems ==
          std::vector<std::string>{"at", "tl-distance", "tl-autopool"});
  }
  SUBCASE("an explicit corpus seed decouples from the global seed") {
    write_text_file(path, R"({"seed": 42, "corpus": {"seed": 5}})");
    const ExperimentConfig cfg = load_experiment_config(path);
    CHECK(cfg.seed == 42);
    CHECK(cfg.corpus.seed == 5);
  }
  SUBCASE("unknown keys are rejected") {
    write_text_file(path, R"({"seeed": 42})");
    CHECK_THROWS_AS(load_experiment_config(path), ValidationError);
    write_text_file(path, R"({"training": {"learning_rate": 0.1}})");
    CHECK_THROWS_AS(load_experiment_config(path), ValidationError);
  }
  SUBCASE("malformed values are rejected") {
    write_text_file(path, R"({"corpus": {"tags_per_track": [2]}})");
    CHECK_THROWS_AS(load_experiment_config(path), ValidationError);
    write_text_file(path, R"({"systems": ["at", "at"]})");
    CHECK_THROWS_AS(load_experiment_config(path), ValidationError);
    write_text_file(path, R"({"systems": ["tl-cosine"]})");
    CHECK_THROWS_AS(load_experiment_config(path), ValidationError);
    write_text_file(path, "{not json");
    CHECK_THROWS_AS(load_experiment_config(path), IoError);
  }
}

TEST_CASE("config serialization is canonical") {
  testutil::TempDir dir("exp-ser");
  ExperimentConfig a = micro_config(dir.file("run"));
  ExperimentConfig b = micro_config(dir.file("run"));
  CHECK(serialize_experiment_config(a) == serialize_experiment_config(b));

  // Loading a serialized config reproduces the same serialization.
  const auto path = dir.file("echo.json");
  write_text_file(path, serialize_experiment_config(a));
  const ExperimentConfig back = load_experiment_config(path);
  CHECK(serialize_experiment_config(back) == serialize_experiment_config(a));
}

TEST_CASE("a micro experiment runs end to end and reruns are byte-identical") {
  testutil::TempDir dir("exp-run");
  const ExperimentConfig cfg = micro_config(dir.file("run"));
  run_experiment(cfg);

  Experiment exp(cfg);
  for (const char* name :
       {"corpus.manifest", "patches.f32", "patches.idx", "rankings-train.txt",
        "rankings-validation.txt", "rankings-test.txt", "rankings-all.txt",
        "triplets-train-distance.txt", "triplets-val-distance.txt", "at.params",
        "at.loss", "at.estimates", "at.metrics.json", "tl-distance.params",
        "tl-distance.loss", "tl-distance.embeddings", "tl-distance.metrics.json",
        "profile.txt", "report.txt", "report.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(exp.path(name)));
  }

  const std::string report_json = read_text_file(exp.path("report.json"));
  const std::string report_text = read_text_file(exp.path("report.txt"));
  const auto doc = nlohmann::json::parse(report_json);
  CHECK(doc.contains("at_auc"));
  CHECK(doc.at("systems").contains("at"));
  CHECK(doc.at("systems").at("tl-distance").contains("map"));
  CHECK(doc.at("systems").at("tl-distance").contains("ndcg"));
  CHECK(doc.at("training").at("tl-distance").contains("best_epoch"));
  CHECK(report_text.find("at mean-auc") != std::string::npos);

  const auto profile = doc.at("profile").get<std::vector<double>>();
  REQUIRE(profile.size() == static_cast<std::size_t>(cfg.corpus.n_tracks - 1));
  for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
    CHECK(profile[i] >= profile[i + 1]);
  }

  SUBCASE("every stage skips on a rerun and outputs do not change") {
    const std::string params_before = read_text_file(exp.path("tl-distance.params"));
    CHECK_FALSE(exp.generate());
    CHECK_FALSE(exp.rank());
    CHECK_FALSE(exp.mine());
    CHECK_FALSE(exp.train());
    CHECK_FALSE(exp.embed());
    CHECK_FALSE(exp.estimate_tags());
    CHECK_FALSE(exp.evaluate());
    CHECK_FALSE(exp.profile());
    CHECK_FALSE(exp.report());
    CHECK(read_text_file(exp.path("report.json")) == report_json);
    CHECK(read_text_file(exp.path("report.txt")) == report_text);
    CHECK(read_text_file(exp.path("tl-distance.params")) == params_before);
  }

  SUBCASE("changing the eval slice reruns only evaluation and reporting") {
    ExperimentConfig changed = cfg;
    changed.eval.k = 4;
    Experiment exp2(changed);
    CHECK_FALSE(exp2.generate());
    CHECK_FALSE(exp2.rank());
    CHECK_FALSE(exp2.mine());
    CHECK_FALSE(exp2.train());
    CHECK_FALSE(exp2.embed());
    CHECK_FALSE(exp2.estimate_tags());
    CHECK(exp2.evaluate());
    CHECK(exp2.report());
  }

  SUBCASE("a failing stage leaves a marker and recovers on the next run") {
    const std::string manifest = read_text_file(exp.path("corpus.manifest"));
    patch_file(exp.path("corpus.manifest"), "track 0 ", "track 0 0.125 ");
    Experiment exp2(cfg);
    CHECK_THROWS_AS(exp2.train(), StateError);
    CHECK(fs::exists(exp.path("train-at.failed")));

    write_text_file(exp.path("corpus.manifest"), manifest);
    CHECK(exp2.train());
    CHECK_FALSE(fs::exists(exp.path("train-at.failed")));
    CHECK(fs::exists(exp.path("at.params")));
  }
}

TEST_CASE("stages demand their inputs in order") {
  testutil::TempDir dir("exp-order");
  const ExperimentConfig cfg = micro_config(dir.file("fresh"));
  Experiment exp(cfg);
  CHECK_THROWS_AS(exp.mine(), IoError);
  CHECK_THROWS_AS(exp.evaluate(), IoError);
  CHECK_THROWS_AS(exp.report(), IoError);
}
