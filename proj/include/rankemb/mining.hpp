#ifndef RANKEMB_MINING_HPP_
#define RANKEMB_MINING_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "rankemb/rng.hpp"
#include "rankemb/types.hpp"

namespace rankemb {

enum class MiningStrategy { kNeighbors, kRandomUniform, kDistanceBased };

MiningStrategy mining_strategy_from_string(const std::string& s);
std::string to_string(MiningStrategy s);

struct MiningConfig {
  MiningStrategy strategy = MiningStrategy::kDistanceBased;
  int n_positives = 15;
  int n_negatives = 250;
  std::uint64_t seed = 1;

  void validate() const;
};

// (anchor, positive, negative) with the 1-based ranks of positive and
// negative in the anchor's reference ranking. Valid iff positive_rank <
// negative_rank and positive_rank <= n_positives.
struct Triplet {
  TrackId anchor = -1;
  TrackId positive = -1;
  TrackId negative = -1;
  int positive_rank = 0;  // i
  int negative_rank = 0;  // j
};

struct NegativeDraw {
  TrackId id = -1;
  int rank = 0;
  bool uniform_fallback = false;  // distance-based pool had all-zero scores
};

struct MiningResult {
  std::vector<Triplet> triplets;
  int truncated_pairs = 0;    // pairs whose candidate pool was < n_negatives
  int fallback_draws = 0;     // distance-based draws that fell back to uniform
};

bool triplet_is_valid(const Triplet& trip, const RankedList& ranking,
                      const MiningConfig& cfg);

// Draws one negative for the pair (anchor, rank i). Candidates are the ranks
// strictly after i. Neighbors walks them in order (pass the 0-based step via
// `neighbor_step`); the random strategies consume `rng`.
NegativeDraw sample_negative(const RankedList& ranking, int positive_rank,
                             MiningStrategy strategy, Rng& rng,
                             int neighbor_step = 0);

// Offline mining over all anchors: positives are ranks 1..n_positives, each
// paired with n_negatives distinct negatives per the strategy. Short pools
// emit what they have and are counted in truncated_pairs.
MiningResult mine_triplets(const std::vector<RankedList>& rankings,
                           const MiningConfig& cfg);

}  // namespace rankemb

#endif  // RANKEMB_MINING_HPP_
