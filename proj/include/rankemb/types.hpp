#ifndef RANKEMB_TYPES_HPP_
#define RANKEMB_TYPES_HPP_

#include <vector>

#include "rankemb/common.hpp"

namespace rankemb {

// Per-track tag likelihoods, one value in [0,1] per taxonomy entry.
using TagVector = std::vector<double>;

struct RankedEntry {
  TrackId id;
  double score;
};

// All other tracks of a pool ordered by descending similarity to the query.
// Ties are broken by ascending track id so rankings are deterministic.
struct RankedList {
  TrackId query = -1;
  std::vector<RankedEntry> entries;
};

void validate_tag_vector(const TagVector& t, std::size_t expected_size);

}  // namespace rankemb

#endif  // RANKEMB_TYPES_HPP_
