#ifndef RANKEMB_EXPERIMENT_HPP_
#define RANKEMB_EXPERIMENT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "rankemb/corpus.hpp"
#include "rankemb/metrics.hpp"
#include "rankemb/mining.hpp"
#include "rankemb/net.hpp"
#include "rankemb/oracle.hpp"
#include "rankemb/train.hpp"

namespace rankemb {

// Known system names in report (Table) order.
extern const std::vector<std::string> kSystemOrder;

struct ExperimentConfig {
  CorpusConfig corpus;
  OracleConfig oracle;    // weights default to uniform over the corpus tags
  MiningConfig mining;    // stage seeds are derived from the global seed
  ModelConfig model;      // embedding template; the tagger derives from it
  TrainConfig training;
  EvalConfig eval;
  std::vector<std::string> systems = {"at", "tl-neighbors", "tl-uniform",
                                      "tl-distance", "tl-autopool"};
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  double test_ratio = 0.2;
  double binarize_threshold = 0.5;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/experiment";

  void validate() const;
};

ExperimentConfig default_experiment_config();
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Canonical JSON echo; identical configs serialize to identical bytes.
std::string serialize_experiment_config(const ExperimentConfig& cfg);

// Model and mining strategy backing a named system.
ModelConfig system_model(const ExperimentConfig& cfg, const std::string& system);
MiningStrategy system_strategy(const std::string& system);
bool system_is_triplet(const std::string& system);

// Pipeline stages over a run directory. Outputs are content-stamped: a stage
// whose stamp matches its config slice and input bytes is skipped, so reruns
// resume where they left off. A failing stage leaves a <stage>.failed marker.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg);

  // Each returns true when the stage body executed, false when skipped.
  bool generate();
  bool rank();
  bool mine();
  bool train();
  bool embed();
  bool estimate_tags();
  bool evaluate();
  bool profile();
  bool report();

  void run();

  const ExperimentConfig& config() const { return cfg_; }
  std::filesystem::path path(const std::string& name) const;

 private:
  template <typename Body>
  bool run_stage(const std::string& stage, const std::vector<std::string>& inputs,
                 const std::vector<std::string>& outputs, Body body);
  std::string stage_stamp(const std::string& stage,
                          const std::vector<std::string>& inputs) const;
  Corpus load_corpus() const;
  Split load_split(const Corpus& corpus) const;
  bool train_system(const std::string& system, int system_index);

  ExperimentConfig cfg_;
  std::filesystem::path dir_;
  std::string config_echo_;
};

void run_experiment(const ExperimentConfig& cfg);

}  // namespace rankemb

#endif  // RANKEMB_EXPERIMENT_HPP_
