#include "learnsim/nn/adam.hpp"

#include <cmath>

#include "learnsim/core/errors.hpp"

namespace learnsim::nn {

void adam_step(AdamState& state, ParameterStore& params, const Gradients& grads) {
  for (const auto& [name, entry] : params.entries()) {
    if (entry.frozen) continue;
    auto g = grads.find(name);
    if (g == grads.end()) throw ContractError("adam_step: missing gradient for trainable parameter " + name);
    if (g->second.shape() != entry.value.shape()) {
      throw DimensionError("adam_step: gradient shape " + shape_string(g->second.shape()) + " for parameter " + name +
                           " of shape " + shape_string(entry.value.shape()));
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  for (auto& [name, entry] : params.entries()) {
    if (entry.frozen) continue;
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, entry.value.shape(), 0.0);
    auto [v_it, v_new] = state.second_moment.try_emplace(name, entry.value.shape(), 0.0);
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (m.shape() != entry.value.shape()) throw DimensionError("adam_step: moment shape mismatch for " + name);
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      entry.value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace learnsim::nn
