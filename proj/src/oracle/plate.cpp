#include "learnsim/oracle/plate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "learnsim/core/errors.hpp"
#include "learnsim/core/random.hpp"

namespace learnsim::oracle {

using graph::NodeKind;
using graph::operator+;
using graph::operator-;
using graph::operator*;
using graph::Vec3;
using nlohmann::json;

json PlateScenario::to_json() const {
  return {{"length", length},
          {"width", width},
          {"nx", nx},
          {"ny", ny},
          {"thickness", thickness},
          {"has_hole", has_hole},
          {"hole_radius", hole_radius},
          {"hole_x", hole_x},
          {"hole_y", hole_y},
          {"clamp_left", clamp_left},
          {"clamp_right", clamp_right},
          {"actuator_x", actuator_x},
          {"amplitude", amplitude},
          {"actuator_radius", actuator_radius},
          {"actuator_ring_nodes", actuator_ring_nodes},
          {"E", E},
          {"poisson", poisson},
          {"sigma_y", sigma_y},
          {"H", H},
          {"contact_factor", contact_factor},
          {"contact_radius", contact_radius},
          {"load_fraction", load_fraction},
          {"tolerance", tolerance},
          {"max_iterations", max_iterations}};
}

PlateScenario PlateScenario::from_json(const json& j) {
  PlateScenario s;
  try {
#define LEARNSIM_FIELD(name) s.name = j.value(#name, s.name)
    LEARNSIM_FIELD(length);
    LEARNSIM_FIELD(width);
    LEARNSIM_FIELD(nx);
    LEARNSIM_FIELD(ny);
    LEARNSIM_FIELD(thickness);
    LEARNSIM_FIELD(has_hole);
    LEARNSIM_FIELD(hole_radius);
    LEARNSIM_FIELD(hole_x);
    LEARNSIM_FIELD(hole_y);
    LEARNSIM_FIELD(clamp_left);
    LEARNSIM_FIELD(clamp_right);
    LEARNSIM_FIELD(actuator_x);
    LEARNSIM_FIELD(amplitude);
    LEARNSIM_FIELD(actuator_radius);
    LEARNSIM_FIELD(actuator_ring_nodes);
    LEARNSIM_FIELD(E);
    LEARNSIM_FIELD(poisson);
    LEARNSIM_FIELD(sigma_y);
    LEARNSIM_FIELD(H);
    LEARNSIM_FIELD(contact_factor);
    LEARNSIM_FIELD(contact_radius);
    LEARNSIM_FIELD(load_fraction);
    LEARNSIM_FIELD(tolerance);
    LEARNSIM_FIELD(max_iterations);
#undef LEARNSIM_FIELD
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad plate scenario: ") + e.what());
  }
  return s;
}

void PlateScenario::validate() const {
  if (nx < 2 || ny < 2) throw ConfigError("plate grid needs at least 2x2 nodes");
  if (!(length > 0 && width > 0 && thickness > 0)) throw ConfigError("plate dimensions must be positive");
  if (!clamp_left && !clamp_right) throw ConfigError("at least one plate side must be clamped");
  if (has_hole) {
    if (!(hole_radius > 0)) throw ConfigError("hole radius must be positive");
    if (!(hole_x - hole_radius > 0 && hole_x + hole_radius < length && hole_y - hole_radius > 0 &&
          hole_y + hole_radius < width))
      throw ConfigError("hole must lie strictly inside the plate");
  }
  if (!(std::abs(amplitude) <= 0.1)) throw ConfigError("actuator amplitude must lie in [-0.1, 0.1]");
  if (!(actuator_x >= 0.25 * length && actuator_x <= 0.75 * length))
    throw ConfigError("actuator x must lie in [0.25 L, 0.75 L]");
  if (!(actuator_radius > 0) || actuator_ring_nodes < 3) throw ConfigError("bad actuator geometry");
  if (!(E > 0 && H > 0 && sigma_y > 0 && contact_factor > 0 && contact_radius > 0))
    throw ConfigError("material and contact constants must be positive");
  if (!(load_fraction > 0 && load_fraction <= 1)) throw ConfigError("load_fraction must be in (0, 1]");
  if (!(tolerance > 0) || max_iterations < 1) throw ConfigError("bad relaxation settings");
}

PlateScenario sample_plate_scenario(std::mt19937_64& rng, bool ood, const ScenarioRanges& r) {
  PlateScenario s;
  s.thickness = uniform(rng, r.thickness_lo, r.thickness_hi);
  s.hole_radius = r.hole_scale * (ood ? uniform(rng, r.extra_hole_lo, r.extra_hole_hi) : uniform(rng, r.hole_lo, r.hole_hi));
  const double margin = 0.02;
  s.hole_x = uniform(rng, s.hole_radius + margin, s.length - s.hole_radius - margin);
  s.hole_y = uniform(rng, s.hole_radius + margin, s.width - s.hole_radius - margin);
  switch (uniform_index(rng, 3)) {
    case 0: s.clamp_right = false; break;
    case 1: s.clamp_left = false; break;
    default: break;
  }
  s.actuator_x = uniform(rng, 0.25 * s.length, 0.75 * s.length);
  s.amplitude = r.amplitude_scale * uniform(rng, -r.amplitude_max, r.amplitude_max);
  return s;
}

Vec3 PlateModel::actuator_center_at(double s) const { return {actuator_origin[0], actuator_origin[1] + s * scenario.amplitude, 0.0}; }

double PlateModel::schedule(std::size_t t, std::size_t frames) const {
  const std::size_t steps = frames - 1;
  const auto n_load = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(scenario.load_fraction * steps)));
  if (t <= n_load) return static_cast<double>(t) / static_cast<double>(n_load);
  const std::size_t n_unload = steps - n_load;
  return 1.0 - static_cast<double>(t - n_load) / static_cast<double>(n_unload);
}

PlateModel build_plate(const PlateScenario& s) {
  s.validate();
  PlateModel m;
  m.scenario = s;
  const double hx = s.length / (s.nx - 1), hy = s.width / (s.ny - 1);
  m.spacing = std::min(hx, hy);
  m.area = s.thickness * m.spacing;
  auto id = [&](int i, int j) { return j * s.nx + i; };
  std::vector<Vec3> grid;
  std::vector<bool> alive;
  for (int j = 0; j < s.ny; ++j)
    for (int i = 0; i < s.nx; ++i) {
      Vec3 p{i * hx, j * hy, 0.0};
      grid.push_back(p);
      const double dx = p[0] - s.hole_x, dy = p[1] - s.hole_y;
      alive.push_back(!(s.has_hole && dx * dx + dy * dy < s.hole_radius * s.hole_radius));
    }
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j + 1 < s.ny; ++j)
    for (int i = 0; i + 1 < s.nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i, j + 1), d = id(i + 1, j + 1);
      std::array<std::array<int, 3>, 2> pair =
          (i + j) % 2 == 0 ? std::array<std::array<int, 3>, 2>{{{a, b, d}, {a, d, c}}}
                           : std::array<std::array<int, 3>, 2>{{{a, b, c}, {b, d, c}}};
      for (const auto& t : pair)
        if (alive[t[0]] && alive[t[1]] && alive[t[2]]) tris.push_back(t);
    }
  auto clamped = [&](int g) {
    const int i = g % s.nx;
    return (s.clamp_left && i == 0) || (s.clamp_right && i == s.nx - 1);
  };
  // Keep the edge-connected triangle component(s) that touch a clamped node.
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int k = 0; k < 3; ++k) {
      int u = tris[t][k], v = tris[t][(k + 1) % 3];
      edge_tris[{std::min(u, v), std::max(u, v)}].push_back(static_cast<int>(t));
    }
  std::vector<int> comp(tris.size(), -1);
  int n_comp = 0;
  for (std::size_t seed = 0; seed < tris.size(); ++seed) {
    if (comp[seed] >= 0) continue;
    std::vector<int> stack{static_cast<int>(seed)};
    comp[seed] = n_comp;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int k = 0; k < 3; ++k) {
        int u = tris[t][k], v = tris[t][(k + 1) % 3];
        for (int o : edge_tris[{std::min(u, v), std::max(u, v)}])
          if (comp[o] < 0) {
            comp[o] = n_comp;
            stack.push_back(o);
          }
      }
    }
    ++n_comp;
  }
  std::set<int> keep_comp;
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int v : tris[t])
      if (clamped(v)) keep_comp.insert(comp[t]);
  if (keep_comp.empty()) throw GenerationError("plate has no clamped material left", 0);
  std::vector<int> remap(grid.size(), -1);
  std::vector<std::array<int, 3>> kept;
  for (std::size_t t = 0; t < tris.size(); ++t)
    if (keep_comp.count(comp[t])) kept.push_back(tris[t]);
  for (const auto& t : kept)
    for (int v : t) remap[v] = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (remap[g] < 0) continue;
    remap[g] = static_cast<int>(m.nodes.size());
    m.nodes.push_back(grid[g]);
    m.kinds.push_back(clamped(static_cast<int>(g)) ? NodeKind::plate_fixed : NodeKind::plate_free);
  }
  std::set<std::pair<int, int>> edges;
  for (const auto& t : kept) {
    std::array<int, 3> c{remap[t[0]], remap[t[1]], remap[t[2]]};
    m.cells.push_back(c);
    for (int k = 0; k < 3; ++k) edges.insert({std::min(c[k], c[(k + 1) % 3]), std::max(c[k], c[(k + 1) % 3])});
  }
  for (auto [i, j] : edges) {
    const double l0 = graph::norm(m.nodes[j] - m.nodes[i]);
    m.springs.push_back({i, j, l0, s.E * m.area / l0});
  }
  m.n_plate = static_cast<int>(m.nodes.size());
  m.contact_stiffness = s.contact_factor * s.E * m.area / m.spacing;

  // Disk tangent to the pressed edge at frame 0.
  const double R = s.actuator_radius;
  const bool from_top = s.amplitude <= 0.0;
  m.actuator_origin = {s.actuator_x, from_top ? s.width + R : -R, 0.0};
  m.actuator_center = static_cast<int>(m.nodes.size());
  m.nodes.push_back(m.actuator_origin);
  m.kinds.push_back(NodeKind::actuator);
  const int nr = s.actuator_ring_nodes;
  for (int k = 0; k < nr; ++k) {
    const double th = 2.0 * std::numbers::pi * k / nr;
    m.nodes.push_back({m.actuator_origin[0] + R * std::cos(th), m.actuator_origin[1] + R * std::sin(th), 0.0});
    m.kinds.push_back(NodeKind::actuator);
  }
  for (int k = 0; k < nr; ++k)
    m.cells.push_back({m.actuator_center, m.actuator_center + 1 + k, m.actuator_center + 1 + (k + 1) % nr});
  return m;
}

void plate_forces(const PlateModel& m, const std::vector<Vec3>& q, const std::vector<SpringPlasticState>& committed,
                  const Vec3& c, std::vector<Vec3>& force) {
  const auto& s = m.scenario;
  force.assign(m.n_plate, Vec3{0, 0, 0});
  for (std::size_t e = 0; e < m.springs.size(); ++e) {
    const auto& sp = m.springs[e];
    const Vec3 d = q[sp.j] - q[sp.i];
    const double l = graph::norm(d);
    const double strain = (l - sp.rest_length) / sp.rest_length;
    const double N = return_map(strain, committed[e], s.E, s.sigma_y, s.H).stress * m.area;
    const Vec3 f = (N / l) * d;
    force[sp.i] = force[sp.i] + f;
    force[sp.j] = force[sp.j] - f;
  }
  const double R = s.actuator_radius;
  for (int p = 0; p < m.n_plate; ++p) {
    const Vec3 d = q[p] - c;
    const double dist = graph::norm(d);
    if (dist < R && dist > 0.0) force[p] = force[p] + (m.contact_stiffness * (R - dist) / dist) * d;
  }
}

RelaxResult relax_plate(const PlateModel& m, std::vector<Vec3>& q, const std::vector<SpringPlasticState>& committed,
                        const Vec3& c) {
  const auto& s = m.scenario;
  const double tol = s.tolerance * s.E * m.area;
  std::vector<double> mass(m.n_plate, 0.0);
  for (const auto& sp : m.springs) {
    mass[sp.i] += sp.stiffness;
    mass[sp.j] += sp.stiffness;
  }
  for (int p = 0; p < m.n_plate; ++p)
    if (graph::norm(q[p] - c) < s.actuator_radius + 2.0 * m.spacing) mass[p] += m.contact_stiffness;
  std::vector<int> free;
  for (int p = 0; p < m.n_plate; ++p)
    if (m.kinds[p] == NodeKind::plate_free) free.push_back(p);

  // FIRE constants (standard values).
  const double dt_max = 1.0, f_inc = 1.1, f_dec = 0.5, alpha0 = 0.1, f_alpha = 0.99;
  const int n_min = 5;
  double dt = 0.1, alpha = alpha0;
  int n_pos = 0;
  std::vector<Vec3> v(m.n_plate, Vec3{0, 0, 0}), f;
  RelaxResult r;
  for (int it = 0; it <= s.max_iterations; ++it) {
    plate_forces(m, q, committed, c, f);
    double res = 0.0;
    for (int p : free) res = std::max(res, graph::norm(f[p]));
    r.iterations = it;
    r.residual = res;
    if (!std::isfinite(res)) return r;
    if (res < tol) {
      r.converged = true;
      return r;
    }
    if (it == s.max_iterations) break;
    double P = 0.0;
    for (int p : free) P += graph::dot(f[p], v[p]);
    if (P > 0.0) {
      if (++n_pos > n_min) {
        dt = std::min(dt * f_inc, dt_max);
        alpha *= f_alpha;
      }
    } else {
      n_pos = 0;
      dt *= f_dec;
      alpha = alpha0;
      for (int p : free) {
        q[p] = q[p] - (0.5 * dt) * v[p];
        v[p] = {0, 0, 0};
      }
    }
    double vn = 0.0, fn = 0.0;
    for (int p : free) {
      v[p] = v[p] + (dt / mass[p]) * f[p];
      vn += graph::dot(v[p], v[p]) * mass[p];
      fn += graph::dot(f[p], f[p]) / mass[p];
    }
    const double mix = fn > 0.0 ? std::sqrt(vn / fn) : 0.0;
    for (int p : free) {
      v[p] = (1.0 - alpha) * v[p] + (alpha * mix / mass[p]) * f[p];
      q[p] = q[p] + dt * v[p];
    }
  }
  return r;
}

data::TrajectoryBundle gen_solid_trajectory(const PlateScenario& s, std::size_t n_steps) {
  if (n_steps < 1) throw ConfigError("solid trajectory needs at least one step");
  const PlateModel m = build_plate(s);
  const std::size_t N = m.nodes.size(), frames = n_steps + 1;
  std::vector<Vec3> q = m.nodes;
  std::vector<SpringPlasticState> state(m.springs.size());
  std::vector<std::vector<int>> incident(m.n_plate);
  for (std::size_t e = 0; e < m.springs.size(); ++e) {
    incident[m.springs[e].i].push_back(static_cast<int>(e));
    incident[m.springs[e].j].push_back(static_cast<int>(e));
  }
  std::vector<double> Q(frames * N * 3), U(frames * N * 3), VM(frames * N, 0.0), SIG(frames * N * 6, 0.0),
      RES(frames, 0.0), PLAST(frames * m.springs.size(), 0.0);
  auto record_positions = [&](std::size_t t) {
    for (std::size_t i = 0; i < N; ++i)
      for (int d = 0; d < 3; ++d) {
        Q[(t * N + i) * 3 + d] = q[i][d];
        U[(t * N + i) * 3 + d] = q[i][d] - m.nodes[i][d];
      }
  };
  record_positions(0);
  std::vector<double> stress(m.springs.size());
  for (std::size_t t = 1; t < frames; ++t) {
    const Vec3 c = m.actuator_center_at(m.schedule(t, frames));
    const Vec3 shift = c - m.actuator_origin;
    for (std::size_t i = m.n_plate; i < N; ++i) q[i] = m.nodes[i] + shift;
    const auto rr = relax_plate(m, q, state, c);
    if (!rr.converged)
      throw GenerationError("plate relaxation did not converge (residual " + std::to_string(rr.residual) + ")", t);
    RES[t] = rr.residual;
    for (std::size_t e = 0; e < m.springs.size(); ++e) {
      const auto& sp = m.springs[e];
      const double strain = (graph::norm(q[sp.j] - q[sp.i]) - sp.rest_length) / sp.rest_length;
      const auto rm = return_map(strain, state[e], s.E, s.sigma_y, s.H);
      state[e] = rm.state;
      stress[e] = rm.stress;
      PLAST[t * m.springs.size() + e] = rm.state.accumulated;
    }
    record_positions(t);
    for (int i = 0; i < m.n_plate; ++i) {
      double vm = 0.0;
      std::array<double, 6> avg{};
      for (int e : incident[i]) {
        const auto& sp = m.springs[e];
        const Vec3 d = q[sp.j] - q[sp.i];
        const Vec3 n = (1.0 / graph::norm(d)) * d;
        vm = std::max(vm, std::abs(stress[e]));
        avg[0] += stress[e] * n[0] * n[0];
        avg[1] += stress[e] * n[1] * n[1];
        avg[2] += stress[e] * n[2] * n[2];
        avg[3] += stress[e] * n[0] * n[1];
        avg[4] += stress[e] * n[1] * n[2];
        avg[5] += stress[e] * n[0] * n[2];
      }
      VM[t * N + i] = vm;
      for (int k = 0; k < 6; ++k) SIG[(t * N + i) * 6 + k] = incident[i].empty() ? 0.0 : avg[k] / incident[i].size();
    }
  }
  data::TrajectoryBundle b;
  b.family = "solid";
  b.n_nodes = N;
  b.n_steps = frames;
  b.dt = 1.0;
  std::vector<double> kinds(N), cells;
  for (std::size_t i = 0; i < N; ++i) kinds[i] = static_cast<double>(m.kinds[i]);
  for (const auto& c : m.cells)
    for (int v : c) cells.push_back(v);
  std::vector<double> springs;
  for (const auto& sp : m.springs) {
    springs.push_back(sp.i);
    springs.push_back(sp.j);
  }
  b.set("kinds", {N}, kinds, false);
  b.set("cells", {m.cells.size(), 3}, cells, false);
  b.set("springs", {m.springs.size(), 2}, springs, false);
  b.set("q", {frames, N, 3}, Q, true);
  b.set("u", {frames, N, 3}, U, true);
  b.set("sigma_vm", {frames, N}, VM, true);
  b.set("sigma", {frames, N, 6}, SIG, true);
  b.set("residual", {frames}, RES, true);
  b.set("spring_plastic", {frames, m.springs.size()}, PLAST, true);
  b.meta = {{"generator", "spring-plate"},
            {"scenario", s.to_json()},
            {"contact_radius", s.contact_radius},
            {"residual_tolerance", s.tolerance * s.E * m.area},
            {"loading_steps", std::lround(s.load_fraction * n_steps)},
            {"sigma_vm_definition", "oracle proxy: max |axial spring stress| over incident springs"},
            {"sigma_definition", "mean of spring stress n(x)n over incident springs, Voigt xx yy zz xy yz xz"}};
  return b;
}

}  // namespace learnsim::oracle
