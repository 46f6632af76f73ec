#pragma once

#include <string>
#include <vector>

#include "learnsim/metrics/metrics.hpp"
#include "learnsim/mgn/model.hpp"
#include "learnsim/tignn/model.hpp"

namespace learnsim::metrics {

// Rolls the model out from frame 0 for min(T, n_steps - 1) steps and pairs
// the prediction with the bundle. Solid series: q and sigma_vm (or sigma for
// a 9-wide decoder) on plate nodes. Fluid series: q, v, e on fluid particles.
// A divergence is recorded, not thrown.
TrajectoryRollout solid_rollout(const mgn::MgnModel& m, const data::TrajectoryBundle& b, const std::string& split,
                                const std::string& id, std::size_t T);
TrajectoryRollout fluid_rollout(const tignn::TignnModel& m, const data::TrajectoryBundle& b, const std::string& split,
                                const std::string& id, std::size_t T);

// RRMSE percent of one variable at the full rollout length, NaN when diverged.
double series_rrmse(const TrajectoryRollout& r, const std::string& variable);

}  // namespace learnsim::metrics
