#pragma once

#include <vector>

#include "learnsim/tignn/model.hpp"

namespace learnsim::tignn {

// Diagnostics of one evaluated state. Energies are physical; the production
// and rate terms are measured in the network's scaled coordinates.
struct ThermoStep {
  double internal_energy = 0.0;     // sum of the e dofs
  double entropy_production = 0.0;  // M-part estimate, >= 0
  double entropy = 0.0;             // running integral of the production estimate
  double energy_rate = 0.0;         // dE . zdot, zero when the degeneracy conditions hold
  double degeneracy = 0.0;
};

struct DerivativeResult {
  nn::Tensor zdot;  // physical units [N, 7]; wall rows zero
  ThermoStep diagnostics;
};

DerivativeResult predict_derivative(const TignnModel& m, const std::vector<graph::NodeKind>& kinds, const State& z);

// z + dt * zdot on fluid rows; wall rows unchanged. Throws DivergenceError(0) on non-finite input.
State euler_step(const std::vector<graph::NodeKind>& kinds, const State& z, const nn::Tensor& zdot, double dt);

struct FluidRolloutState {
  std::size_t frames = 0;        // T + 1
  std::vector<State> z;          // per frame
  std::vector<ThermoStep> budget;  // per step, evaluated at the state the step starts from
};

// Throws DivergenceError(step) on non-finite output.
FluidRolloutState rollout(const TignnModel& m, const std::vector<graph::NodeKind>& kinds, const State& z0,
                          std::size_t T, double dt);

State state_at(const data::TrajectoryBundle& b, std::size_t t);

}  // namespace learnsim::tignn
