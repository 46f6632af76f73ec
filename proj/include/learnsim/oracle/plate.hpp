#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "learnsim/data/bundle.hpp"
#include "learnsim/graph/multigraph.hpp"
#include "learnsim/oracle/return_map.hpp"

namespace learnsim::oracle {

// Spring-lattice plate in the x-y plane pressed by a rigid disk.
struct PlateScenario {
  double length = 0.5;
  double width = 0.25;
  int nx = 15;
  int ny = 8;
  double thickness = 0.05;
  bool has_hole = true;
  double hole_radius = 0.03;
  double hole_x = 0.25;
  double hole_y = 0.125;
  bool clamp_left = true;
  bool clamp_right = true;
  double actuator_x = 0.25;
  // Net actuator travel along y at the end of loading. Negative presses down
  // on the top edge, positive presses up on the bottom edge.
  double amplitude = -0.02;
  double actuator_radius = 0.05;
  int actuator_ring_nodes = 16;
  double E = 210e3;
  double poisson = 0.3;  // recorded only; a central-force lattice has no independent Poisson ratio
  double sigma_y = 300.0;
  double H = 21e3;
  double contact_factor = 10.0;  // penalty stiffness / spring stiffness
  double contact_radius = 0.04;  // r_C for contact edges in the learned model
  double load_fraction = 330.0 / 450.0;
  double tolerance = 1e-9;       // residual force limit relative to E * thickness * spacing
  int max_iterations = 200000;

  nlohmann::json to_json() const;
  static PlateScenario from_json(const nlohmann::json& j);
  void validate() const;
};

struct ScenarioRanges {
  double thickness_lo = 0.03, thickness_hi = 0.1;
  double hole_lo = 0.05, hole_hi = 0.1;
  double extra_hole_lo = 0.1, extra_hole_hi = 0.15;
  double hole_scale = 0.5;       // applied to both hole intervals
  double amplitude_max = 0.1;
  double amplitude_scale = 0.25;
};

PlateScenario sample_plate_scenario(std::mt19937_64& rng, bool out_of_distribution, const ScenarioRanges& ranges = {});

struct Spring {
  int i, j;
  double rest_length;
  double stiffness;  // E * A / rest_length
};

// Assembled lattice: plate nodes first, then the actuator (center then ring).
struct PlateModel {
  PlateScenario scenario;
  std::vector<graph::Vec3> nodes;
  std::vector<graph::NodeKind> kinds;
  std::vector<std::array<int, 3>> cells;
  std::vector<Spring> springs;  // plate mesh edges only
  int n_plate = 0;
  int actuator_center = -1;
  double area = 0.0;
  double spacing = 0.0;
  double contact_stiffness = 0.0;
  graph::Vec3 actuator_origin{};

  graph::Vec3 actuator_center_at(double s) const;
  // Actuator travel fraction at frame t of `frames` frames.
  double schedule(std::size_t t, std::size_t frames) const;
};

PlateModel build_plate(const PlateScenario& s);

// Internal plus contact force on every plate node; springs evaluated with the
// trial return map from `committed`.
void plate_forces(const PlateModel& m, const std::vector<graph::Vec3>& q, const std::vector<SpringPlasticState>& committed,
                  const graph::Vec3& disk_center, std::vector<graph::Vec3>& force);

struct RelaxResult {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// FIRE relaxation of plate_free nodes; q is updated in place.
RelaxResult relax_plate(const PlateModel& m, std::vector<graph::Vec3>& q,
                        const std::vector<SpringPlasticState>& committed, const graph::Vec3& disk_center);

// Frames 0..n_steps: loading for round(load_fraction * n_steps) steps, then unloading back to the start.
data::TrajectoryBundle gen_solid_trajectory(const PlateScenario& s, std::size_t n_steps);

}  // namespace learnsim::oracle
