#ifndef RANKEMB_ORACLE_HPP_
#define RANKEMB_ORACLE_HPP_

#include <map>
#include <string>
#include <vector>

#include "rankemb/types.hpp"

namespace rankemb {

enum class OracleKind { kWeightedJaccard, kWeightedCosine };

OracleKind oracle_kind_from_string(const std::string& s);
std::string to_string(OracleKind kind);

// The reference similarity over tag vectors. Weighted Jaccard is the default:
// non-linear, weighted, bounded in [0,1]. Weighted cosine is the alternative.
struct OracleConfig {
  OracleKind kind = OracleKind::kWeightedJaccard;
  std::vector<double> weights;  // one positive weight per tag

  void validate() const;
};

OracleConfig uniform_oracle(std::size_t n_tags,
                            OracleKind kind = OracleKind::kWeightedJaccard);

// Symmetric similarity score in [0,1]. Summation order is fixed (index 0..m-1)
// so score(a,b) and score(b,a) are bitwise equal.
double oracle_similarity(const TagVector& t1, const TagVector& t2,
                         const OracleConfig& cfg);

// Ranks all other tracks of the pool by descending similarity to the query,
// ties by ascending id.
RankedList rank_by_similarity(TrackId query,
                              const std::map<TrackId, TagVector>& corpus_tags,
                              const OracleConfig& cfg);

// One ranked list per pool member, in ascending query-id order.
std::vector<RankedList> rank_pool(const std::map<TrackId, TagVector>& pool_tags,
                                  const OracleConfig& cfg);

// Element j = mean over queries of the score at rank j+1. Non-increasing by
// construction (each per-query sequence is sorted descending).
std::vector<double> similarity_profile(const std::vector<RankedList>& rankings);

}  // namespace rankemb

#endif  // RANKEMB_ORACLE_HPP_
