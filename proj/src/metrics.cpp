#include "rankemb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace rankemb {

void EvalConfig::validate() const {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (n_relevant < 1) throw ValidationError("n_relevant must be >= 1");
  if (n_relevant > k) throw ValidationError("n_relevant must be <= k");
  if (gains.size() != static_cast<std::size_t>(n_relevant)) {
    throw ValidationError("need one gain per relevant rank");
  }
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!(gains[i] > 0.0)) throw ValidationError("gains must be positive");
    if (i > 0 && !(gains[i - 1] > gains[i])) {
      throw ValidationError("gains must be strictly descending");
    }
  }
}

void validate_retrieval_result(const RetrievalResult& result, const EvalConfig& cfg) {
  cfg.validate();
  if (result.relevant.size() != static_cast<std::size_t>(cfg.n_relevant)) {
    throw ValidationError("relevant list length differs from n_relevant");
  }
  if (result.estimated.size() < static_cast<std::size_t>(cfg.k)) {
    throw ValidationError("estimated list shorter than k");
  }
  std::unordered_set<TrackId> seen;
  seen.reserve(result.estimated.size());
  for (TrackId id : result.estimated) {
    if (id == result.query) throw ValidationError("query appears in estimated list");
    if (!seen.insert(id).second) {
      throw ValidationError("duplicate id in estimated list");
    }
  }
  for (TrackId id : result.relevant) {
    if (id == result.query) throw ValidationError("query appears in relevant list");
  }
}

std::vector<TrackId> knn_rank(const std::vector<double>& query_embedding,
                              const std::map<TrackId, std::vector<double>>& candidates) {
  if (candidates.empty()) throw ValidationError("empty candidate set");
  std::vector<std::pair<double, TrackId>> scored;
  scored.reserve(candidates.size());
  for (const auto& [id, emb] : candidates) {
    if (emb.size() != query_embedding.size()) {
      throw DimensionError("candidate embedding dimension differs from query");
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < emb.size(); ++i) {
      const double diff = emb[i] - query_embedding[i];
      d2 += diff * diff;
    }
    scored.emplace_back(d2, id);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<TrackId> out;
  out.reserve(scored.size());
  for (const auto& [d2, id] : scored) out.push_back(id);
  return out;
}

double average_precision_at_k(const RetrievalResult& result, const EvalConfig& cfg) {
  validate_retrieval_result(result, cfg);
  const std::unordered_set<TrackId> rel(result.relevant.begin(), result.relevant.end());
  int hits = 0;
  double sum = 0.0;
  for (int p = 1; p <= cfg.k; ++p) {
    if (rel.count(result.estimated[p - 1])) {
      ++hits;
      sum += static_cast<double>(hits) / p;
    }
  }
  return sum / cfg.n_relevant;
}

double recall_at_k(const RetrievalResult& result, const EvalConfig& cfg) {
  validate_retrieval_result(result, cfg);
  const std::unordered_set<TrackId> rel(result.relevant.begin(), result.relevant.end());
  int hits = 0;
  for (int p = 0; p < cfg.k; ++p) hits += rel.count(result.estimated[p]) ? 1 : 0;
  return static_cast<double>(hits) / cfg.n_relevant;
}

double reciprocal_rank_at_k(const RetrievalResult& result, const EvalConfig& cfg) {
  validate_retrieval_result(result, cfg);
  const std::unordered_set<TrackId> rel(result.relevant.begin(), result.relevant.end());
  for (int p = 1; p <= cfg.k; ++p) {
    if (rel.count(result.estimated[p - 1])) return 1.0 / p;
  }
  return 0.0;
}

double ndcg_at_k(const RetrievalResult& result, const EvalConfig& cfg) {
  validate_retrieval_result(result, cfg);
  std::unordered_map<TrackId, int> grade_index;
  for (int j = 0; j < cfg.n_relevant; ++j) grade_index[result.relevant[j]] = j;
  double dcg = 0.0;
  for (int p = 1; p <= cfg.k; ++p) {
    const auto it = grade_index.find(result.estimated[p - 1]);
    if (it != grade_index.end()) {
      dcg += cfg.gains[it->second] / std::log2(static_cast<double>(p) + 1.0);
    }
  }
  double ideal = 0.0;
  for (int j = 0; j < cfg.n_relevant; ++j) {
    ideal += cfg.gains[j] / std::log2(static_cast<double>(j) + 2.0);
  }
  return dcg / ideal;
}

AucReport mean_auc(const std::vector<TagVector>& estimates,
                   const std::vector<std::vector<int>>& truths) {
  if (estimates.size() != truths.size()) {
    throw DimensionError("estimate and truth counts differ");
  }
  if (estimates.empty()) throw ValidationError("no examples for AUC");
  const std::size_t m = truths[0].size();
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (estimates[i].size() != m || truths[i].size() != m) {
      throw DimensionError("inconsistent tag dimensions in AUC input");
    }
  }

  AucReport report;
  report.per_tag.assign(m, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int included = 0;
  std::vector<std::pair<double, int>> sl;
  for (std::size_t t = 0; t < m; ++t) {
    sl.clear();
    int n_pos = 0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      sl.emplace_back(estimates[i][t], truths[i][t]);
      n_pos += truths[i][t] ? 1 : 0;
    }
    const int n_neg = static_cast<int>(sl.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
      report.skipped.push_back(static_cast<int>(t));
      continue;
    }
    std::sort(sl.begin(), sl.end());
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < sl.size()) {
      std::size_t j = i;
      while (j < sl.size() && sl[j].first == sl[i].first) ++j;
      const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
      for (std::size_t q = i; q < j; ++q) {
        if (sl[q].second) pos_rank_sum += midrank;
      }
      i = j;
    }
    const double auc = (pos_rank_sum - 0.5 * n_pos * (n_pos + 1.0)) /
                       (static_cast<double>(n_pos) * n_neg);
    report.per_tag[t] = auc;
    sum += auc;
    ++included;
  }
  if (included == 0) throw ValidationError("no tag has both classes");
  report.mean_auc = sum / included;
  return report;
}

CiStat aggregate_with_ci(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw ValidationError("confidence interval needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / static_cast<double>(n - 1));
  const double halfwidth = 1.96 * s / std::sqrt(static_cast<double>(n));
  return {mean * 100.0, halfwidth * 100.0};
}

MetricsReport evaluate_system(const std::map<TrackId, std::vector<double>>& features,
                              const std::vector<RankedList>& ground_truth,
                              const EvalConfig& cfg, EvalMode mode,
                              const OracleConfig& oracle) {
  cfg.validate();
  if (features.size() < 2) throw ValidationError("need at least two tracks to evaluate");
  if (ground_truth.empty()) throw ValidationError("no ground-truth rankings");
  if (static_cast<int>(features.size()) - 1 < cfg.k) {
    throw ValidationError("k exceeds the candidate count");
  }

  MetricsReport report;
  report.n_queries = static_cast<int>(ground_truth.size());
  for (const char* name : {"map", "recall", "rr", "ndcg"}) {
    report.metrics.push_back({name, {}, {}});
  }

  for (const auto& gt : ground_truth) {
    const TrackId q = gt.query;
    const auto qit = features.find(q);
    if (qit == features.end()) {
      throw ValidationError("missing features for track " + std::to_string(q));
    }
    if (gt.entries.size() < static_cast<std::size_t>(cfg.n_relevant)) {
      throw ValidationError("ground-truth ranking shorter than n_relevant");
    }

    RetrievalResult r;
    r.query = q;
    for (int j = 0; j < cfg.n_relevant; ++j) r.relevant.push_back(gt.entries[j].id);

    if (mode == EvalMode::kEmbedding) {
      std::map<TrackId, std::vector<double>> candidates(features);
      candidates.erase(q);
      r.estimated = knn_rank(qit->second, candidates);
    } else {
      std::vector<std::pair<double, TrackId>> scored;
      scored.reserve(features.size() - 1);
      for (const auto& [id, tags] : features) {
        if (id == q) continue;
        scored.emplace_back(-oracle_similarity(qit->second, tags, oracle), id);
      }
      std::sort(scored.begin(), scored.end());
      for (const auto& [neg_sim, id] : scored) r.estimated.push_back(id);
    }

    report.metrics[0].per_query.push_back(average_precision_at_k(r, cfg));
    report.metrics[1].per_query.push_back(recall_at_k(r, cfg));
    report.metrics[2].per_query.push_back(reciprocal_rank_at_k(r, cfg));
    report.metrics[3].per_query.push_back(ndcg_at_k(r, cfg));
  }

  for (auto& metric : report.metrics) {
    metric.stat = aggregate_with_ci(metric.per_query);
  }
  return report;
}

}  // namespace rankemb
