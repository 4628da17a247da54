#include "rankemb/optim.hpp"

#include <cmath>

namespace rankemb {

void AdamConfig::validate() const {
  if (!(lr >= 0.0)) throw ValidationError("learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("adam epsilon must be > 0");
}

void adam_step(std::vector<double>& params, const std::vector<double>& grad,
               AdamState& state, const AdamConfig& cfg) {
  cfg.validate();
  const std::size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw DimensionError("adam_step shapes disagree");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    if (!std::isfinite(g)) throw NumericError("non-finite gradient in adam_step");
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace rankemb
