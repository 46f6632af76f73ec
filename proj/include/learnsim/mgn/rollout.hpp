#pragma once

#include <optional>
#include <vector>

#include "learnsim/mgn/model.hpp"

namespace learnsim::mgn {

// Actuator node positions per frame, ordered as topo.actuator.
using Schedule = std::vector<std::vector<graph::Vec3>>;

Schedule schedule_from_bundle(const Topology& topo, const data::TrajectoryBundle& b);

// One-step prediction in physical units: [N, out_width].
nn::Tensor predict_step(const MgnModel& m, const Topology& topo, const std::vector<graph::Vec3>& qt,
                        const std::vector<graph::Vec3>& actuator_now, const std::vector<graph::Vec3>& actuator_next);

// Plate_free nodes move by the predicted displacement, plate_fixed nodes stay,
// actuator nodes jump to their scheduled positions.
std::vector<graph::Vec3> integrate(const Topology& topo, const std::vector<graph::Vec3>& qt, const nn::Tensor& pred,
                                   const std::vector<graph::Vec3>& actuator_next);

struct RolloutState {
  std::size_t frames = 0;                  // T + 1
  std::vector<std::vector<graph::Vec3>> q;  // per frame
  std::vector<double> stress;              // [frames, N, out_width - 3]; zero on actuator nodes and frame 0
  std::vector<std::vector<graph::Edge>> contact_edges;  // per frame, rebuilt from that frame's positions
};

// T autoregressive steps from q_initial. Throws DivergenceError(step) on non-finite output.
RolloutState rollout(const MgnModel& m, const Topology& topo, const std::vector<graph::Vec3>& q_initial,
                     const Schedule& schedule, std::size_t T);

}  // namespace learnsim::mgn
