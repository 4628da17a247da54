#ifndef RANKEMB_TRAIN_HPP_
#define RANKEMB_TRAIN_HPP_

#include <cstdint>
#include <vector>

#include "rankemb/corpus.hpp"
#include "rankemb/mining.hpp"
#include "rankemb/net.hpp"
#include "rankemb/optim.hpp"

namespace rankemb {

struct TrainConfig {
  double margin = 0.5;
  AdamConfig adam;          // adam.lr is the learning rate
  int batch_triplets = 42;  // triplets per batch; patches per batch for the tagger
  int patience = 5;
  int max_epochs = 30;
  // Cap on (anchor, positive) groups visited per epoch; 0 walks every group.
  // Keeps epochs short when the mined pool is large.
  int steps_per_epoch = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochStat {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochStat> history;
  int best_epoch = 0;    // 1-based epoch whose parameters are returned
  int stopped_epoch = 0; // last epoch that ran
  double best_val_loss = 0.0;
};

struct TrainResult {
  std::vector<double> params;
  TrainReport report;
};

// Triplets sharing an (anchor, positive) pair; each batch is drawn from one.
struct TripletGroup {
  TrackId anchor = -1;
  TrackId positive = -1;
  std::vector<TrackId> negatives;
};

struct PatchTriplet {
  PatchTensor anchor, positive, negative;
};

// Groups a mined pool by (anchor, positive), preserving first-seen order.
std::vector<TripletGroup> group_triplets(const std::vector<Triplet>& pool);

// One training batch: a random group, batch_triplets of its negatives, one
// shared patch for anchor and positive, a fresh patch per negative. A group
// smaller than batch_triplets is used whole (with a warning).
std::vector<PatchTriplet> build_minibatch(const std::vector<Triplet>& pool,
                                          const Corpus& corpus, int batch_triplets,
                                          std::uint64_t seed);

// Mean triplet loss over a pool, embedding each referenced track through its
// deterministic canonical patch. Used for the per-epoch validation loss.
double pool_triplet_loss(const Net& net, const std::vector<double>& params,
                         const Corpus& corpus, const std::vector<Triplet>& pool,
                         double margin);

TrainResult train_triplet(const Corpus& corpus,
                          const std::vector<Triplet>& train_triplets,
                          const std::vector<Triplet>& val_triplets,
                          const ModelConfig& model_cfg, const TrainConfig& cfg);

TrainResult train_tagger(const Corpus& corpus, const Split& split,
                         double binarize_threshold, const ModelConfig& model_cfg,
                         const TrainConfig& cfg);

}  // namespace rankemb

#endif  // RANKEMB_TRAIN_HPP_
