#include "tedvae/autodiff/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tedvae::ad {

void adam_step(std::span<Parameter* const> params, GradientSet& grads, AdamState& state) {
  for (const Parameter* p : params) {
    if (!grads.contains(*p)) throw std::invalid_argument("adam_step: missing gradient for '" + p->name() + "'");
  }
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->size(), 0.0);
      state.second_moment.emplace_back(p->size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }

  ++state.step;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.size()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for '" + p.name() + "'");
    }
    const auto g = grads.of(p);
    auto w = p.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
  grads.clear();
}

}  // namespace tedvae::ad
