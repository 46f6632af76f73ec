#include "learnsim/mgn/rollout.hpp"

#include <cmath>

#include "learnsim/core/errors.hpp"
#include "learnsim/graph/spatial_hash.hpp"

namespace learnsim::mgn {

using graph::Vec3;

Schedule schedule_from_bundle(const Topology& topo, const data::TrajectoryBundle& b) {
  Schedule s(b.n_steps);
  for (std::size_t t = 0; t < b.n_steps; ++t) {
    const auto q = b.points_at("q", t);
    for (int a : topo.actuator) s[t].push_back(q[a]);
  }
  return s;
}

nn::Tensor predict_step(const MgnModel& m, const Topology& topo, const std::vector<Vec3>& qt,
                        const std::vector<Vec3>& act_now, const std::vector<Vec3>& act_next) {
  std::vector<Vec3> u(topo.n_nodes, Vec3{0, 0, 0});
  for (std::size_t k = 0; k < topo.actuator.size(); ++k)
    u[topo.actuator[k]] = graph::operator-(act_next[k], act_now[k]);
  const auto in = normalize_inputs(m, build_inputs(topo, qt, u));
  nn::Tape tape(false);
  return m.target_norm.denormalize(forward(m, tape, in).value());
}

std::vector<Vec3> integrate(const Topology& topo, const std::vector<Vec3>& qt, const nn::Tensor& pred,
                            const std::vector<Vec3>& act_next) {
  std::vector<Vec3> q = qt;
  for (int i : topo.free)
    for (int d = 0; d < 3; ++d) q[i][d] = qt[i][d] + pred.at(i, d);
  for (std::size_t k = 0; k < topo.actuator.size(); ++k) q[topo.actuator[k]] = act_next[k];
  return q;
}

RolloutState rollout(const MgnModel& m, const Topology& topo, const std::vector<Vec3>& q_initial,
                     const Schedule& schedule, std::size_t T) {
  if (schedule.size() < T + 1) throw ConfigError("actuator schedule shorter than the rollout horizon");
  const std::size_t N = topo.n_nodes, S = m.config.out_width - 3;
  RolloutState r;
  r.frames = T + 1;
  r.q.push_back(q_initial);
  r.stress.assign(r.frames * N * S, 0.0);
  auto contacts = [&](const std::vector<Vec3>& q) {
    graph::Multigraph g;
    g.n_nodes = N;
    g.kinds = topo.kinds;
    g.positions = q;
    graph::rebuild_contact_edges(g, topo.contact_radius);
    return g.contact_edges;
  };
  r.contact_edges.push_back(contacts(q_initial));
  for (std::size_t t = 0; t < T; ++t) {
    const auto pred = predict_step(m, topo, r.q.back(), schedule[t], schedule[t + 1]);
    if (!pred.all_finite()) throw DivergenceError("mgn rollout produced non-finite values", t + 1);
    r.q.push_back(integrate(topo, r.q.back(), pred, schedule[t + 1]));
    for (int i : topo.plate)
      for (std::size_t c = 0; c < S; ++c) r.stress[((t + 1) * N + i) * S + c] = pred.at(i, 3 + c);
    r.contact_edges.push_back(contacts(r.q.back()));
  }
  return r;
}

}  // namespace learnsim::mgn
