#include "cen/adam.hpp"

#include <cmath>

namespace cen {

void adam_step(ParamStore& params, const ad::GradMap& grads, AdamState& state) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw ContractError("adam_step: gradient for unknown parameter '" + name + "'");
  }
  for (const auto& entry : params.entries()) {
    if (entry.trainable && !grads.count(entry.name)) {
      throw ContractError("adam_step: missing gradient for trainable parameter '" + entry.name + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  for (auto& entry : params.entries()) {
    if (!entry.trainable) continue;
    const Tensor& g = grads.at(entry.name);
    if (g.shape() != entry.value.shape()) {
      throw DimensionError("adam_step: gradient " + shape_str(g.shape()) + " for '" + entry.name + "' of shape " +
                           shape_str(entry.value.shape()));
    }
    auto [m_it, m_new] = state.first_moment.try_emplace(entry.name, entry.value.shape());
    auto [v_it, v_new] = state.second_moment.try_emplace(entry.name, entry.value.shape());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (m.shape() != entry.value.shape()) throw DimensionError("adam_step: moment shape drift for '" + entry.name + "'");
    auto& p = entry.value;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double clip_global_norm(ad::GradMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : grads)
    for (double x : g.data()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [_, g] : grads)
      for (double& x : g.data()) x *= s;
  }
  return norm;
}

}  // namespace cen
