#include "rankemb/loss.hpp"

#include <algorithm>
#include <cmath>

namespace rankemb {

TripletLossResult triplet_loss(const std::vector<double>& fa,
                               const std::vector<double>& fp,
                               const std::vector<double>& fn, double margin) {
  const std::size_t d = fa.size();
  if (d == 0) throw ValidationError("triplet loss embeddings are empty");
  if (fp.size() != d || fn.size() != d) {
    throw DimensionError("triplet loss embeddings have mismatched dimensions");
  }
  if (margin <= 0.0) throw ValidationError("margin must be positive");

  double d_ap = 0.0, d_an = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double ap = fa[i] - fp[i];
    const double an = fa[i] - fn[i];
    d_ap += ap * ap;
    d_an += an * an;
  }

  TripletLossResult res;
  res.grad_anchor.assign(d, 0.0);
  res.grad_positive.assign(d, 0.0);
  res.grad_negative.assign(d, 0.0);
  const double hinge = d_ap - d_an + margin;
  if (hinge > 0.0) {
    res.loss = hinge;
    for (std::size_t i = 0; i < d; ++i) {
      res.grad_anchor[i] = 2.0 * (fn[i] - fp[i]);
      res.grad_positive[i] = 2.0 * (fp[i] - fa[i]);
      res.grad_negative[i] = 2.0 * (fa[i] - fn[i]);
    }
  }
  return res;
}

BceLossResult bce_loss(const std::vector<double>& predictions,
                       const std::vector<int>& targets) {
  if (predictions.empty()) throw ValidationError("bce loss inputs are empty");
  if (predictions.size() != targets.size()) {
    throw DimensionError("bce loss prediction/target length mismatch");
  }
  constexpr double kClip = 1e-7;
  BceLossResult res;
  res.grad.assign(predictions.size(), 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (targets[i] != 0 && targets[i] != 1) {
      throw ValidationError("bce targets must be 0 or 1");
    }
    const double p = std::clamp(predictions[i], kClip, 1.0 - kClip);
    const double y = targets[i] ? 1.0 : 0.0;
    res.loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    // Zero gradient where clipping saturates, matching the clipped loss.
    if (predictions[i] > kClip && predictions[i] < 1.0 - kClip) {
      res.grad[i] = (p - y) / (p * (1.0 - p));
    }
  }
  return res;
}

}  // namespace rankemb
