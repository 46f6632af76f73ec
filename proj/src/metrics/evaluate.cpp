#include "learnsim/metrics/evaluate.hpp"

#include <cmath>

#include "learnsim/core/errors.hpp"
#include "learnsim/mgn/rollout.hpp"
#include "learnsim/tignn/rollout.hpp"

namespace learnsim::metrics {

namespace {

std::size_t clip_steps(const data::TrajectoryBundle& b, std::size_t T) {
  if (b.n_steps == 0) throw ValidationError("bundle has no frames");
  return std::min(T, b.n_steps - 1);
}

}  // namespace

TrajectoryRollout solid_rollout(const mgn::MgnModel& m, const data::TrajectoryBundle& b, const std::string& split,
                                const std::string& id, std::size_t T) {
  if (b.family != "solid") throw ValidationError("bundle '" + id + "' is not a solid trajectory");
  T = clip_steps(b, T);
  const auto topo = mgn::topology_from_bundle(b);
  TrajectoryRollout r{split, id, T + 1, topo.n_nodes, {}, std::nullopt};
  std::vector<bool> mask(topo.n_nodes, false);
  for (int i : topo.plate) mask[i] = true;

  const bool tensor = m.config.out_width == 9;
  const std::string stress_name = tensor ? "sigma" : "sigma_vm";
  const std::size_t sw = tensor ? 6 : 1;
  SeriesPair q{"q", 3, {}, {}, mask}, s{stress_name, sw, {}, {}, mask};
  try {
    const auto out = mgn::rollout(m, topo, b.points_at("q", 0), mgn::schedule_from_bundle(topo, b), T);
    for (std::size_t f = 0; f <= T; ++f) {
      const auto truth = b.points_at("q", f);
      for (std::size_t i = 0; i < topo.n_nodes; ++i)
        for (int d = 0; d < 3; ++d) {
          q.pred.push_back(out.q[f][i][d]);
          q.truth.push_back(truth[i][d]);
        }
      const double* st = b.step_data(stress_name, f);
      s.truth.insert(s.truth.end(), st, st + topo.n_nodes * sw);
    }
    s.pred = out.stress;
  } catch (const DivergenceError& e) {
    r.diverged = e.step();
    q.pred.clear();
    q.truth.clear();
    s.truth.clear();
  }
  r.series = {std::move(q), std::move(s)};
  return r;
}

TrajectoryRollout fluid_rollout(const tignn::TignnModel& m, const data::TrajectoryBundle& b, const std::string& split,
                                const std::string& id, std::size_t T) {
  if (b.family != "fluid") throw ValidationError("bundle '" + id + "' is not a fluid trajectory");
  T = clip_steps(b, T);
  const auto kinds = b.kinds();
  TrajectoryRollout r{split, id, T + 1, kinds.size(), {}, std::nullopt};
  std::vector<bool> mask(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) mask[i] = kinds[i] == graph::NodeKind::fluid;

  SeriesPair q{"q", 3, {}, {}, mask}, v{"v", 3, {}, {}, mask}, e{"e", 1, {}, {}, mask};
  try {
    const auto out = tignn::rollout(m, kinds, tignn::state_at(b, 0), T, b.dt);
    for (std::size_t f = 0; f <= T; ++f) {
      const auto truth = tignn::state_at(b, f);
      for (std::size_t i = 0; i < kinds.size(); ++i) {
        for (int d = 0; d < 3; ++d) {
          q.pred.push_back(out.z[f][i * 7 + d]);
          q.truth.push_back(truth[i * 7 + d]);
          v.pred.push_back(out.z[f][i * 7 + 3 + d]);
          v.truth.push_back(truth[i * 7 + 3 + d]);
        }
        e.pred.push_back(out.z[f][i * 7 + 6]);
        e.truth.push_back(truth[i * 7 + 6]);
      }
    }
  } catch (const DivergenceError& err) {
    r.diverged = err.step();
    q = {"q", 3, {}, {}, mask};
    v = {"v", 3, {}, {}, mask};
    e = {"e", 1, {}, {}, mask};
  }
  r.series = {std::move(q), std::move(v), std::move(e)};
  return r;
}

double series_rrmse(const TrajectoryRollout& r, const std::string& variable) {
  RolloutReport rep;
  add_rollout(rep, r, {r.frames - 1});
  for (const auto& row : rep.rows)
    if (row.variable == variable) return row.rrmse_percent;
  throw ContractError("rollout has no series '" + variable + "'");
}

}  // namespace learnsim::metrics
