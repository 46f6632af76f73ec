#include "learnsim/oracle/chain.hpp"

#include <cmath>
#include <random>

#include "learnsim/core/errors.hpp"
#include "learnsim/core/random.hpp"
#include "learnsim/graph/multigraph.hpp"

namespace learnsim::oracle {

using nlohmann::json;

json ChainScenario::to_json() const {
  return {{"n", n},           {"spacing", spacing},   {"rest_fraction", rest_fraction},
          {"origin_x", origin_x}, {"k", k},           {"c_d", c_d},
          {"dt", dt},         {"substeps", substeps}, {"impulse", impulse},
          {"e_lo", e_lo},     {"e_hi", e_hi},         {"seed", seed},
          {"wave_speed", wave_speed}, {"density", density}, {"connectivity_radius", connectivity_radius}};
}

ChainScenario ChainScenario::from_json(const json& j) {
  ChainScenario s;
  try {
#define LEARNSIM_FIELD(name) s.name = j.value(#name, s.name)
    LEARNSIM_FIELD(n);
    LEARNSIM_FIELD(spacing);
    LEARNSIM_FIELD(rest_fraction);
    LEARNSIM_FIELD(origin_x);
    LEARNSIM_FIELD(k);
    LEARNSIM_FIELD(c_d);
    LEARNSIM_FIELD(dt);
    LEARNSIM_FIELD(substeps);
    LEARNSIM_FIELD(impulse);
    LEARNSIM_FIELD(e_lo);
    LEARNSIM_FIELD(e_hi);
    LEARNSIM_FIELD(seed);
    LEARNSIM_FIELD(wave_speed);
    LEARNSIM_FIELD(density);
    LEARNSIM_FIELD(connectivity_radius);
#undef LEARNSIM_FIELD
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad chain scenario: ") + e.what());
  }
  return s;
}

void ChainScenario::validate() const {
  if (n < 3) throw ConfigError("chain needs at least 3 particles");
  if (!(spacing > 0 && rest_fraction > 0 && k > 0 && c_d >= 0 && dt > 0) || substeps < 1)
    throw ConfigError("chain constants out of range");
  if (!(e_lo > 0 && e_hi >= e_lo)) throw ConfigError("internal energy must start positive");
  if (!(impulse >= 0)) throw ConfigError("impulse must be non-negative");
}

ChainState chain_initial_state(const ChainScenario& s) {
  s.validate();
  std::mt19937_64 rng(s.seed);
  ChainState z(static_cast<std::size_t>(s.n) * 7, 0.0);
  for (int i = 0; i < s.n; ++i) {
    double* r = z.data() + i * 7;
    r[0] = s.origin_x + i * s.spacing;
    const bool wall = i == 0 || i == s.n - 1;
    for (int d = 0; d < 3; ++d) r[3 + d] = wall ? 0.0 : s.impulse * normal01(rng);
    r[6] = uniform(rng, s.e_lo, s.e_hi);
  }
  return z;
}

ChainState chain_derivative(const ChainScenario& s, const ChainState& z) {
  const int n = s.n;
  const double l0 = s.rest_fraction * s.spacing;
  ChainState dz(z.size(), 0.0);
  for (int i = 1; i + 1 < n; ++i)
    for (int d = 0; d < 3; ++d) dz[i * 7 + d] = z[i * 7 + 3 + d];
  for (int i = 0; i + 1 < n; ++i) {
    const int j = i + 1;
    const double* a = z.data() + i * 7;
    const double* b = z.data() + j * 7;
    double dq[3], dv[3], l2 = 0.0, w2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      dq[d] = b[d] - a[d];
      dv[d] = b[3 + d] - a[3 + d];
      l2 += dq[d] * dq[d];
      w2 += dv[d] * dv[d];
    }
    const double l = std::sqrt(l2);
    const double tension = s.k * (l - l0) / l;
    const bool wall_i = i == 0, wall_j = j == n - 1;
    for (int d = 0; d < 3; ++d) {
      const double f = tension * dq[d] + s.c_d * dv[d];  // force on i
      if (!wall_i) dz[i * 7 + 3 + d] += f;
      if (!wall_j) dz[j * 7 + 3 + d] -= f;
    }
    const double heat = s.c_d * w2;
    if (wall_i) dz[j * 7 + 6] += heat;
    else if (wall_j) dz[i * 7 + 6] += heat;
    else {
      dz[i * 7 + 6] += 0.5 * heat;
      dz[j * 7 + 6] += 0.5 * heat;
    }
  }
  return dz;
}

double chain_total_energy(const ChainScenario& s, const ChainState& z) {
  const double l0 = s.rest_fraction * s.spacing;
  double E = 0.0;
  for (int i = 0; i < s.n; ++i) {
    const double* r = z.data() + i * 7;
    E += 0.5 * (r[3] * r[3] + r[4] * r[4] + r[5] * r[5]) + r[6];
  }
  for (int i = 0; i + 1 < s.n; ++i) {
    double l2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double x = z[(i + 1) * 7 + d] - z[i * 7 + d];
      l2 += x * x;
    }
    const double stretch = std::sqrt(l2) - l0;
    E += 0.5 * s.k * stretch * stretch;
  }
  return E;
}

double chain_entropy(const ChainScenario& s, const ChainState& z) {
  double S = 0.0;
  for (int i = 0; i < s.n; ++i) S += std::log(z[i * 7 + 6]);
  return S;
}

void chain_rk4_step(const ChainScenario& s, ChainState& z, double h) {
  auto axpy = [](const ChainState& x, const ChainState& y, double a) {
    ChainState r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + a * y[i];
    return r;
  };
  const auto k1 = chain_derivative(s, z);
  const auto k2 = chain_derivative(s, axpy(z, k1, 0.5 * h));
  const auto k3 = chain_derivative(s, axpy(z, k2, 0.5 * h));
  const auto k4 = chain_derivative(s, axpy(z, k3, h));
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

data::TrajectoryBundle gen_fluid_trajectory(const ChainScenario& s, std::size_t n_steps) {
  if (n_steps < 1) throw ConfigError("fluid trajectory needs at least one frame");
  ChainState z = chain_initial_state(s);
  const std::size_t N = s.n, W = 7;
  std::vector<double> Z(n_steps * N * W), ZD(n_steps * N * W);
  const double h = s.dt / s.substeps;
  for (std::size_t t = 0; t < n_steps; ++t) {
    if (t > 0)
      for (int k = 0; k < s.substeps; ++k) chain_rk4_step(s, z, h);
    const auto dz = chain_derivative(s, z);
    std::copy(z.begin(), z.end(), Z.begin() + t * N * W);
    std::copy(dz.begin(), dz.end(), ZD.begin() + t * N * W);
  }
  data::TrajectoryBundle b;
  b.family = "fluid";
  b.n_nodes = N;
  b.n_steps = n_steps;
  b.dt = s.dt;
  std::vector<double> kinds(N, static_cast<double>(graph::NodeKind::fluid));
  kinds.front() = kinds.back() = static_cast<double>(graph::NodeKind::wall);
  b.set("kinds", {N}, kinds, false);
  b.set("z", {n_steps, N, W}, Z, true);
  b.set("zdot", {n_steps, N, W}, ZD, true);
  b.meta = {{"generator", "metriplectic-chain"},
            {"scenario", s.to_json()},
            {"connectivity_radius", s.connectivity_radius},
            {"wave_speed", s.wave_speed},
            {"density", s.density},
            {"state_layout", "q(3) v(3) e(1)"}};
  return b;
}

}  // namespace learnsim::oracle
