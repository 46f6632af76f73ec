#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "learnsim/data/bundle.hpp"

namespace learnsim::oracle {

// Damped spring chain with walls at both ends. Damping work is converted into
// internal energy, so E = kinetic + spring + sum(e) is conserved and
// S = sum(ln e) never decreases.
struct ChainScenario {
  int n = 20;                    // including the two wall particles
  double spacing = 0.005;
  double rest_fraction = 0.9;    // rest length / spacing (pretension)
  double origin_x = 0.05;
  double k = 100.0;
  double c_d = 2.0;
  double dt = 0.01;
  int substeps = 10;             // RK4 substeps per stored frame
  double impulse = 0.005;        // std of the initial particle velocities
  double e_lo = 5e-5, e_hi = 1e-4;
  std::uint64_t seed = 1;        // initial velocities and internal energies
  double wave_speed = 10.0;      // metadata only
  double density = 983.2;        // metadata only
  double connectivity_radius = 0.007;

  nlohmann::json to_json() const;
  static ChainScenario from_json(const nlohmann::json& j);
  void validate() const;
};

using ChainState = std::vector<double>;  // n * 7, rows (q, v, e)

ChainState chain_initial_state(const ChainScenario& s);
// Analytic generator: dz/dt at z. Wall rows are zero.
ChainState chain_derivative(const ChainScenario& s, const ChainState& z);
double chain_total_energy(const ChainScenario& s, const ChainState& z);
double chain_entropy(const ChainScenario& s, const ChainState& z);
void chain_rk4_step(const ChainScenario& s, ChainState& z, double h);

data::TrajectoryBundle gen_fluid_trajectory(const ChainScenario& s, std::size_t n_steps);

}  // namespace learnsim::oracle
