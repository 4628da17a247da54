#ifndef RANKEMB_OPTIM_HPP_
#define RANKEMB_OPTIM_HPP_

#include <cstddef>
#include <vector>

#include "rankemb/common.hpp"

namespace rankemb {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update with bias correction. Gradients must be finite.
void adam_step(std::vector<double>& params, const std::vector<double>& grad,
               AdamState& state, const AdamConfig& cfg);

}  // namespace rankemb

#endif  // RANKEMB_OPTIM_HPP_
