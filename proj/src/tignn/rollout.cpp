#include "learnsim/tignn/rollout.hpp"

#include <cmath>

#include "learnsim/core/errors.hpp"

namespace learnsim::tignn {

DerivativeResult predict_derivative(const TignnModel& m, const std::vector<graph::NodeKind>& kinds, const State& z) {
  const auto in = normalize_inputs(m, build_inputs(kinds, z, m.config.connectivity_radius));
  nn::Tape tape(false);
  const auto terms = generic_heads(m, tape, in);
  const nn::Var zd = generic_derivative(terms, in.pairs);
  DerivativeResult r;
  r.zdot = zd.value();
  for (std::size_t i = 0; i < kinds.size(); ++i)
    for (std::size_t d = 0; d < kDof; ++d)
      r.zdot.at(i, d) = kinds[i] == graph::NodeKind::wall ? 0.0 : r.zdot.at(i, d) * m.zdot_scale[d];
  auto& t = r.diagnostics;
  for (std::size_t i = 0; i < kinds.size(); ++i) t.internal_energy += z[i * kDof + 6];
  t.entropy_production = entropy_production(terms, in.pairs);
  t.energy_rate = energy_rate(terms, zd.value());
  t.degeneracy = degeneracy_loss(terms, in.pairs).value().item();
  return r;
}

State euler_step(const std::vector<graph::NodeKind>& kinds, const State& z, const nn::Tensor& zdot, double dt) {
  if (!(dt > 0)) throw ConfigError("time step must be positive");
  if (zdot.rows() != kinds.size() || zdot.cols() != kDof || z.size() != kinds.size() * kDof)
    throw DimensionError("euler_step: state and derivative shapes differ");
  if (!zdot.all_finite()) throw DivergenceError("non-finite state derivative", 0);
  State out = z;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == graph::NodeKind::wall) continue;
    for (std::size_t d = 0; d < kDof; ++d) out[i * kDof + d] = z[i * kDof + d] + dt * zdot.at(i, d);
  }
  return out;
}

FluidRolloutState rollout(const TignnModel& m, const std::vector<graph::NodeKind>& kinds, const State& z0,
                          std::size_t T, double dt) {
  FluidRolloutState r;
  r.frames = T + 1;
  r.z.push_back(z0);
  double S = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    auto d = predict_derivative(m, kinds, r.z.back());
    if (!d.zdot.all_finite()) throw DivergenceError("tignn rollout produced non-finite values", t + 1);
    S += dt * d.diagnostics.entropy_production;
    d.diagnostics.entropy = S;
    r.z.push_back(euler_step(kinds, r.z.back(), d.zdot, dt));
    r.budget.push_back(d.diagnostics);
  }
  return r;
}

State state_at(const data::TrajectoryBundle& b, std::size_t t) {
  if (b.family != "fluid") throw DataError("tignn needs a fluid bundle");
  const double* p = b.step_data("z", t);
  return State(p, p + b.n_nodes * kDof);
}

}  // namespace learnsim::tignn
