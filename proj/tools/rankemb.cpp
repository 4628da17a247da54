#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankemb/common.hpp"
#include "rankemb/experiment.hpp"

using namespace rankemb;

namespace {

void keep_systems(ExperimentConfig& cfg, bool (*pred)(const std::string&)) {
  std::vector<std::string> kept;
  for (const std::string& system : cfg.systems) {
    if (pred(system)) kept.push_back(system);
  }
  if (kept.empty()) {
    throw ValidationError("no configured system matches the requested mode");
  }
  cfg.systems = std::move(kept);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ranked-list embedding experiments on a synthetic tag corpus"};
  app.set_version_flag("--version", std::string("rankemb ") + kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "experiment config file (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "override the global seed");
  auto* out_opt = app.add_option("--out", out_dir, "override the output directory");

  auto* c_generate = app.add_subcommand(
      "generate", "build the synthetic corpus and its fixed evaluation patches");
  auto* c_rank =
      app.add_subcommand("rank", "write oracle rankings for each split subset");

  auto* c_mine = app.add_subcommand("mine", "mine triplets from the rankings");
  std::string mine_strategy;
  int np = 0, nn = 0;
  c_mine->add_option("--strategy", mine_strategy,
                     "mine only for this strategy: neighbors|uniform|distance");
  auto* np_opt = c_mine->add_option("--np", np, "positives per anchor");
  auto* nn_opt = c_mine->add_option("--nn", nn, "negatives per positive");

  auto* c_train = app.add_subcommand("train", "train the configured systems");
  std::string train_mode;
  double margin = 0.0, lr = 0.0;
  int batch = 0, patience = 0, max_epochs = 0;
  c_train->add_option("--mode", train_mode, "restrict to triplet|tagger systems");
  auto* margin_opt = c_train->add_option("--margin", margin, "triplet loss margin");
  auto* lr_opt = c_train->add_option("--lr", lr, "learning rate");
  auto* batch_opt = c_train->add_option("--batch", batch, "triplets (or patches) per batch");
  auto* patience_opt = c_train->add_option("--patience", patience, "early-stopping patience");
  auto* epochs_opt = c_train->add_option("--max-epochs", max_epochs, "epoch cap");

  auto* c_embed =
      app.add_subcommand("embed", "embed the test tracks with each triplet system");
  auto* c_estimate = app.add_subcommand(
      "estimate-tags", "estimate test-track tag likelihoods with the tagger");

  auto* c_evaluate = app.add_subcommand("evaluate", "score the retrieval metrics");
  int eval_k = 0, eval_relevant = 0;
  auto* k_opt = c_evaluate->add_option("--k", eval_k, "ranking cutoff");
  auto* relevant_opt =
      c_evaluate->add_option("--relevant", eval_relevant, "ground-truth relevant count");

  auto* c_report = app.add_subcommand("report", "assemble the result tables");
  auto* c_profile = app.add_subcommand(
      "profile-similarity", "write the rank-vs-mean-similarity curve");
  auto* c_run = app.add_subcommand("run", "run every stage in order");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = config_path.empty()
                               ? default_experiment_config()
                               : load_experiment_config(config_path);
    if (seed_opt->count()) {
      cfg.seed = seed;
      cfg.corpus.seed = seed;
    }
    if (out_opt->count()) cfg.out_dir = out_dir;

    if (*c_mine && !mine_strategy.empty()) {
      cfg.systems = {"tl-" + to_string(mining_strategy_from_string(mine_strategy))};
    }
    if (np_opt->count()) cfg.mining.n_positives = np;
    if (nn_opt->count()) cfg.mining.n_negatives = nn;

    if (*c_train && !train_mode.empty()) {
      if (train_mode == "triplet") {
        keep_systems(cfg, [](const std::string& s) { return system_is_triplet(s); });
      } else if (train_mode == "tagger") {
        keep_systems(cfg, [](const std::string& s) { return s == "at"; });
      } else {
        throw ValidationError("--mode must be triplet or tagger");
      }
    }
    if (margin_opt->count()) cfg.training.margin = margin;
    if (lr_opt->count()) cfg.training.adam.lr = lr;
    if (batch_opt->count()) cfg.training.batch_triplets = batch;
    if (patience_opt->count()) cfg.training.patience = patience;
    if (epochs_opt->count()) cfg.training.max_epochs = max_epochs;

    if (k_opt->count()) cfg.eval.k = eval_k;
    if (relevant_opt->count()) cfg.eval.n_relevant = eval_relevant;

    Experiment experiment(cfg);
    if (*c_generate) experiment.generate();
    if (*c_rank) experiment.rank();
    if (*c_mine) experiment.mine();
    if (*c_train) experiment.train();
    if (*c_embed) experiment.embed();
    if (*c_estimate) experiment.estimate_tags();
    if (*c_evaluate) experiment.evaluate();
    if (*c_report) experiment.report();
    if (*c_profile) experiment.profile();
    if (*c_run) experiment.run();
  } catch (const std::exception& e) {
    std::cerr << "rankemb: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
