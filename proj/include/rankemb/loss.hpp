#ifndef RANKEMB_LOSS_HPP_
#define RANKEMB_LOSS_HPP_

#include <vector>

#include "rankemb/common.hpp"

namespace rankemb {

struct TripletLossResult {
  double loss = 0.0;
  std::vector<double> grad_anchor, grad_positive, grad_negative;
};

// Hinge on squared Euclidean distances:
//   max(|fa-fp|^2 - |fa-fn|^2 + margin, 0).
// Gradients are zero when the hinge is closed; the zero subgradient is taken
// at the boundary.
TripletLossResult triplet_loss(const std::vector<double>& fa,
                               const std::vector<double>& fp,
                               const std::vector<double>& fn, double margin);

struct BceLossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d predictions
};

// Sum of per-tag binary cross-entropies. Predictions are clipped to
// [1e-7, 1-1e-7] before the logs.
BceLossResult bce_loss(const std::vector<double>& predictions,
                       const std::vector<int>& targets);

}  // namespace rankemb

#endif  // RANKEMB_LOSS_HPP_
