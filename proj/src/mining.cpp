#include "rankemb/mining.hpp"

#include <algorithm>
#include <numeric>

namespace rankemb {

MiningStrategy mining_strategy_from_string(const std::string& s) {
  if (s == "neighbors") return MiningStrategy::kNeighbors;
  if (s == "uniform" || s == "random-uniform") return MiningStrategy::kRandomUniform;
  if (s == "distance" || s == "distance-based") return MiningStrategy::kDistanceBased;
  throw ValidationError("unknown mining strategy: " + s);
}

std::string to_string(MiningStrategy s) {
  switch (s) {
    case MiningStrategy::kNeighbors: return "neighbors";
    case MiningStrategy::kRandomUniform: return "uniform";
    case MiningStrategy::kDistanceBased: return "distance";
  }
  return "?";
}

void MiningConfig::validate() const {
  if (n_positives < 1) throw ValidationError("n_positives must be >= 1");
  if (n_negatives < 1) throw ValidationError("n_negatives must be >= 1");
}

bool triplet_is_valid(const Triplet& trip, const RankedList& ranking,
                      const MiningConfig& cfg) {
  if (ranking.query != trip.anchor) {
    throw ValidationError("ranking belongs to track " +
                          std::to_string(ranking.query) + ", not anchor " +
                          std::to_string(trip.anchor));
  }
  const int len = static_cast<int>(ranking.entries.size());
  const int i = trip.positive_rank, j = trip.negative_rank;
  if (i < 1 || j < 1 || i > len || j > len) return false;
  if (i >= j) return false;  // also rejects positive == negative
  if (i > cfg.n_positives) return false;
  return ranking.entries[i - 1].id == trip.positive &&
         ranking.entries[j - 1].id == trip.negative;
}

NegativeDraw sample_negative(const RankedList& ranking, int positive_rank,
                             MiningStrategy strategy, Rng& rng,
                             int neighbor_step) {
  const int len = static_cast<int>(ranking.entries.size());
  if (positive_rank < 1 || positive_rank >= len) {
    throw ValidationError("no negative candidates after rank " +
                          std::to_string(positive_rank) + " in a list of " +
                          std::to_string(len));
  }

  NegativeDraw draw;
  switch (strategy) {
    case MiningStrategy::kNeighbors: {
      const int j = positive_rank + 1 + neighbor_step;
      if (j > len) {
        throw ValidationError("neighbor walk exhausted the ranking at rank " +
                              std::to_string(j));
      }
      draw.rank = j;
      break;
    }
    case MiningStrategy::kRandomUniform: {
      draw.rank = static_cast<int>(rng.uniform_int(positive_rank + 1, len));
      break;
    }
    case MiningStrategy::kDistanceBased: {
      double total = 0.0;
      for (int j = positive_rank + 1; j <= len; ++j) {
        total += ranking.entries[j - 1].score;
      }
      if (total <= 0.0) {
        // Every remaining candidate has zero similarity; nothing to weight.
        draw.uniform_fallback = true;
        draw.rank = static_cast<int>(rng.uniform_int(positive_rank + 1, len));
        break;
      }
      const double u = rng.uniform() * total;
      double acc = 0.0;
      draw.rank = len;  // guards against rounding at the upper edge
      for (int j = positive_rank + 1; j <= len; ++j) {
        acc += ranking.entries[j - 1].score;
        if (u < acc) {
          draw.rank = j;
          break;
        }
      }
      break;
    }
  }
  draw.id = ranking.entries[draw.rank - 1].id;
  return draw;
}

namespace {

// n_take distinct ranks from {first..last}, uniform, via partial Fisher-Yates.
void draw_uniform_set(int first, int last, int n_take, Rng& rng,
                      std::vector<int>* out) {
  std::vector<int> ranks(last - first + 1);
  std::iota(ranks.begin(), ranks.end(), first);
  for (int k = 0; k < n_take; ++k) {
    const int j = static_cast<int>(rng.uniform_int(k, static_cast<int>(ranks.size()) - 1));
    std::swap(ranks[k], ranks[j]);
    out->push_back(ranks[k]);
  }
}

// n_take distinct ranks, sequential draws with probability proportional to
// the candidate's similarity score among those still in the pool.
void draw_distance_set(const RankedList& ranking, int first, int last,
                       int n_take, Rng& rng, std::vector<int>* out,
                       int* fallback_draws) {
  struct Cand { int rank; double w; };
  std::vector<Cand> pool;
  pool.reserve(last - first + 1);
  double total = 0.0;
  for (int j = first; j <= last; ++j) {
    const double w = ranking.entries[j - 1].score;
    pool.push_back({j, w});
    total += w;
  }
  for (int k = 0; k < n_take; ++k) {
    std::size_t pick = pool.size() - 1;
    if (total <= 0.0) {
      *fallback_draws += 1;
      pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
    } else {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t idx = 0; idx < pool.size(); ++idx) {
        acc += pool[idx].w;
        if (u < acc) {
          pick = idx;
          break;
        }
      }
    }
    out->push_back(pool[pick].rank);
    total -= pool[pick].w;
    pool[pick] = pool.back();
    pool.pop_back();
  }
}

}  // namespace

MiningResult mine_triplets(const std::vector<RankedList>& rankings,
                           const MiningConfig& cfg) {
  cfg.validate();
  if (rankings.empty()) throw ValidationError("no rankings to mine from");
  const int len = static_cast<int>(rankings[0].entries.size());
  for (const auto& r : rankings) {
    if (static_cast<int>(r.entries.size()) != len) {
      throw ValidationError("rankings have unequal lengths; pool mismatch");
    }
  }
  if (cfg.n_positives + 1 > len) {
    throw ValidationError(
        "n_positives=" + std::to_string(cfg.n_positives) +
        " leaves no negatives: need n_positives + 1 <= " + std::to_string(len));
  }

  MiningResult result;
  result.triplets.reserve(static_cast<std::size_t>(rankings.size()) *
                          cfg.n_positives * cfg.n_negatives);
  std::vector<int> negative_ranks;

  for (const auto& ranking : rankings) {
    // Independent per-anchor stream: parallel and serial mining agree.
    Rng rng(seed_mix(cfg.seed, static_cast<std::uint64_t>(ranking.query)));
    for (int i = 1; i <= cfg.n_positives; ++i) {
      const int pool_size = len - i;
      const int n_take = std::min(cfg.n_negatives, pool_size);
      if (n_take < cfg.n_negatives) result.truncated_pairs += 1;

      negative_ranks.clear();
      switch (cfg.strategy) {
        case MiningStrategy::kNeighbors:
          for (int k = 0; k < n_take; ++k) negative_ranks.push_back(i + 1 + k);
          break;
        case MiningStrategy::kRandomUniform:
          draw_uniform_set(i + 1, len, n_take, rng, &negative_ranks);
          break;
        case MiningStrategy::kDistanceBased:
          draw_distance_set(ranking, i + 1, len, n_take, rng, &negative_ranks,
                            &result.fallback_draws);
          break;
      }

      const TrackId positive = ranking.entries[i - 1].id;
      for (int j : negative_ranks) {
        result.triplets.push_back({ranking.query, positive,
                                   ranking.entries[j - 1].id, i, j});
      }
    }
  }
  return result;
}

}  // namespace rankemb
