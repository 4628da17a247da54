#ifndef RANKEMB_METRICS_HPP_
#define RANKEMB_METRICS_HPP_

#include <map>
#include <string>
#include <vector>

#include "rankemb/oracle.hpp"
#include "rankemb/types.hpp"

namespace rankemb {

struct EvalConfig {
  int k = 20;
  int n_relevant = 5;
  std::vector<double> gains = {5.0, 4.0, 3.0, 2.0, 1.0};

  void validate() const;
};

struct RetrievalResult {
  TrackId query = -1;
  std::vector<TrackId> estimated;  // ordered, no duplicates, query excluded
  std::vector<TrackId> relevant;   // ground-truth order, length n_relevant
};

void validate_retrieval_result(const RetrievalResult& result, const EvalConfig& cfg);

// Candidate ids by ascending squared Euclidean distance; ties by ascending id.
std::vector<TrackId> knn_rank(const std::vector<double>& query_embedding,
                              const std::map<TrackId, std::vector<double>>& candidates);

double average_precision_at_k(const RetrievalResult& result, const EvalConfig& cfg);
double recall_at_k(const RetrievalResult& result, const EvalConfig& cfg);
double reciprocal_rank_at_k(const RetrievalResult& result, const EvalConfig& cfg);
double ndcg_at_k(const RetrievalResult& result, const EvalConfig& cfg);

struct AucReport {
  double mean_auc = 0.0;
  std::vector<double> per_tag;  // skipped tags hold NaN
  std::vector<int> skipped;     // tag indices without both classes
};

// Mean-over-tag ROC AUC via the rank-sum formulation, ties counted 0.5.
// estimates[i] and truths[i] describe the same track.
AucReport mean_auc(const std::vector<TagVector>& estimates,
                   const std::vector<std::vector<int>>& truths);

struct CiStat {
  double mean_x100 = 0.0;
  double halfwidth_x100 = 0.0;  // 1.96 * s / sqrt(n), scaled by 100
};

CiStat aggregate_with_ci(const std::vector<double>& values);

struct MetricSummary {
  std::string name;
  CiStat stat;
  std::vector<double> per_query;
};

struct MetricsReport {
  int n_queries = 0;
  std::vector<MetricSummary> metrics;  // map, recall, rr, ndcg in this order
};

enum class EvalMode { kEmbedding, kTagOracle };

// Ranks every ground-truth query against the other feature-map entries, by
// embedding distance or by oracle similarity of estimated tag vectors, and
// scores the four retrieval metrics with confidence intervals.
MetricsReport evaluate_system(const std::map<TrackId, std::vector<double>>& features,
                              const std::vector<RankedList>& ground_truth,
                              const EvalConfig& cfg, EvalMode mode,
                              const OracleConfig& oracle = {});

}  // namespace rankemb

#endif  // RANKEMB_METRICS_HPP_
