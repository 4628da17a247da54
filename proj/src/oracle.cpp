#include "rankemb/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace rankemb {

void validate_tag_vector(const TagVector& t, std::size_t expected_size) {
  if (t.size() != expected_size) {
    throw DimensionError("tag vector has length " + std::to_string(t.size()) +
                         ", expected " + std::to_string(expected_size));
  }
  for (double v : t) {
    if (!std::isfinite(v)) throw ValidationError("tag vector has non-finite component");
    if (v < 0.0 || v > 1.0) {
      throw ValidationError("tag likelihood " + std::to_string(v) +
                            " outside [0,1]");
    }
  }
}

OracleKind oracle_kind_from_string(const std::string& s) {
  if (s == "weighted-jaccard") return OracleKind::kWeightedJaccard;
  if (s == "weighted-cosine") return OracleKind::kWeightedCosine;
  throw ValidationError("unknown oracle kind: " + s);
}

std::string to_string(OracleKind kind) {
  return kind == OracleKind::kWeightedJaccard ? "weighted-jaccard"
                                              : "weighted-cosine";
}

void OracleConfig::validate() const {
  if (weights.empty()) throw ValidationError("oracle weights are empty");
  for (double w : weights) {
    if (!std::isfinite(w) || w <= 0.0) {
      throw ValidationError("oracle weights must be positive and finite");
    }
  }
}

OracleConfig uniform_oracle(std::size_t n_tags, OracleKind kind) {
  OracleConfig cfg;
  cfg.kind = kind;
  cfg.weights.assign(n_tags, 1.0);
  return cfg;
}

double oracle_similarity(const TagVector& t1, const TagVector& t2,
                         const OracleConfig& cfg) {
  const std::size_t m = cfg.weights.size();
  validate_tag_vector(t1, m);
  validate_tag_vector(t2, m);

  if (cfg.kind == OracleKind::kWeightedJaccard) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      num += cfg.weights[i] * std::min(t1[i], t2[i]);
      den += cfg.weights[i] * std::max(t1[i], t2[i]);
    }
    if (den == 0.0) return 0.0;  // two all-zero vectors carry no evidence
    return num / den;
  }

  // Weighted cosine: cosine of the componentwise-weighted vectors. Inputs are
  // non-negative so the value already lands in [0,1]; clamp for rounding.
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = cfg.weights[i] * t1[i];
    const double b = cfg.weights[i] * t2[i];
    dot += a * b;
    n1 += a * a;
    n2 += b * b;
  }
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(n1) * std::sqrt(n2)), 0.0, 1.0);
}

RankedList rank_by_similarity(TrackId query,
                              const std::map<TrackId, TagVector>& corpus_tags,
                              const OracleConfig& cfg) {
  auto it = corpus_tags.find(query);
  if (it == corpus_tags.end()) {
    throw LookupError("unknown query id " + std::to_string(query));
  }
  if (corpus_tags.size() < 2) {
    throw ValidationError("corpus needs at least 2 tracks to rank");
  }
  const TagVector& query_tags = it->second;

  RankedList out;
  out.query = query;
  out.entries.reserve(corpus_tags.size() - 1);
  for (const auto& [id, tags] : corpus_tags) {
    if (id == query) continue;
    out.entries.push_back({id, oracle_similarity(query_tags, tags, cfg)});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const RankedEntry& a, const RankedEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  return out;
}

std::vector<RankedList> rank_pool(const std::map<TrackId, TagVector>& pool_tags,
                                  const OracleConfig& cfg) {
  std::vector<RankedList> out;
  out.reserve(pool_tags.size());
  for (const auto& [id, tags] : pool_tags) {
    (void)tags;
    out.push_back(rank_by_similarity(id, pool_tags, cfg));
  }
  return out;
}

std::vector<double> similarity_profile(
    const std::vector<RankedList>& rankings) {
  if (rankings.empty()) throw ValidationError("similarity profile of empty corpus");
  const std::size_t len = rankings[0].entries.size();
  for (const auto& r : rankings) {
    if (r.entries.size() != len) {
      throw ValidationError("rankings have unequal lengths; pool mismatch");
    }
  }
  std::vector<double> profile(len, 0.0);
  for (const auto& r : rankings) {
    for (std::size_t j = 0; j < len; ++j) profile[j] += r.entries[j].score;
  }
  for (double& v : profile) v /= static_cast<double>(rankings.size());
  return profile;
}

}  // namespace rankemb
