#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "learnsim/core/errors.hpp"
#include "learnsim/graph/spatial_hash.hpp"
#include "learnsim/mgn/rollout.hpp"
#include "learnsim/mgn/train.hpp"
#include "learnsim/oracle/plate.hpp"
#include "test_support.hpp"

using namespace learnsim;
using graph::Vec3;
namespace fs = std::filesystem;

namespace {

oracle::PlateScenario tiny_scenario() {
  oracle::PlateScenario s;
  s.nx = 5;
  s.ny = 3;
  s.has_hole = false;
  s.actuator_ring_nodes = 6;
  s.amplitude = -0.01;
  return s;
}

const data::TrajectoryBundle& tiny_bundle() {
  static const data::TrajectoryBundle b = oracle::gen_solid_trajectory(tiny_scenario(), 6);
  return b;
}

mgn::MgnConfig tiny_config() {
  mgn::MgnConfig c;
  c.latent = 6;
  c.hidden = 5;
  c.mp_blocks = 2;
  c.batch = 2;
  c.seed = 3;
  return c;
}

mgn::MgnModel tiny_model(std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  return mgn::mgn_init(tiny_config(), rng);
}

void zero_prefix(nn::ParameterStore& p, const std::string& prefix) {
  for (auto& [name, e] : p.entries())
    if (name.rfind(prefix, 0) == 0) e.value.fill(0.0);
}

// Slightly irregular positions so feature values are not all on the lattice.
std::vector<Vec3> jittered(const std::vector<Vec3>& q, std::mt19937_64& rng, double amp) {
  auto out = q;
  for (auto& p : out)
    for (int d = 0; d < 3; ++d) p[d] += uniform(rng, -amp, amp);
  return out;
}

mgn::StepInputs tiny_inputs(const mgn::MgnModel& m, const mgn::Topology& topo, std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  const auto q = jittered(topo.q0, rng, 0.004);
  std::vector<Vec3> u(topo.n_nodes, Vec3{0, 0, 0});
  for (int a : topo.actuator) u[a] = {0.0, -0.001, 0.0};
  return mgn::normalize_inputs(m, mgn::build_inputs(topo, q, u));
}

// Straight-line message passing: concatenated inputs through the plain MLP.
mgn::Latents reference_process(const mgn::MgnModel& m, nn::Tape&, const mgn::StepInputs& in, mgn::Latents l) {
  const auto spec = m.block_spec();
  for (std::size_t k = 0; k < m.config.mp_blocks; ++k) {
    const std::string b = "processor.block" + std::to_string(k) + ".";
    auto edge = [&](nn::Var e, const std::vector<int>& s, const std::vector<int>& d, const std::string& name) {
      if (s.empty()) return e;
      const auto x = nn::concat_cols({e, nn::gather_rows(l.node, s), nn::gather_rows(l.node, d)});
      return nn::add(e, nn::mlp_forward(spec, m.params, b + name, x));
    };
    const auto mesh = edge(l.mesh, in.mesh_src, in.mesh_dst, "mesh");
    const auto contact = edge(l.contact, in.contact_src, in.contact_dst, "contact");
    const auto x = nn::concat_cols({l.node, nn::scatter_add_rows(mesh, in.mesh_dst, in.n_nodes),
                                    nn::scatter_add_rows(contact, in.contact_dst, in.n_nodes)});
    l.node = nn::add(l.node, nn::mlp_forward(spec, m.params, b + "node", x));
    l.mesh = mesh;
    l.contact = contact;
  }
  return l;
}

double max_abs_diff(const nn::Tensor& a, const nn::Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("mgn encoder widths and zero weights") {
  auto m = tiny_model();
  const auto topo = mgn::topology_from_bundle(tiny_bundle());
  const auto in = tiny_inputs(m, topo);
  nn::Tape tape(false);
  auto l = mgn::encode(m, tape, in);
  CHECK(l.node.value().shape() == nn::Shape{topo.n_nodes, 6});
  CHECK(l.mesh.value().shape() == nn::Shape{2 * topo.mesh_edges.size(), 6});
  CHECK(l.contact.value().cols() == 6);

  zero_prefix(m.params, "encoder.");
  nn::Tape t2(false);
  l = mgn::encode(m, t2, in);
  for (auto v : {l.node, l.mesh, l.contact})
    for (double x : v.value().values()) CHECK(x == 0.0);

  std::mt19937_64 rng(1);
  mgn::MgnConfig full;
  full.mp_blocks = 1;
  const auto big = mgn::mgn_init(full, rng);
  CHECK(big.params.value("encoder.node.layer2.weight").cols() == 128);
  CHECK(big.params.value("decoder.layer2.weight").cols() == 4);
}

TEST_CASE("mgn directed inputs mirror each stored edge") {
  const auto topo = mgn::topology_from_bundle(tiny_bundle());
  std::mt19937_64 rng(2);
  const auto q = jittered(topo.q0, rng, 0.003);
  const auto in = mgn::build_inputs(topo, q, std::vector<Vec3>(topo.n_nodes, Vec3{0, 0, 0}));
  REQUIRE(in.mesh.rows() == 2 * topo.mesh_edges.size());
  for (std::size_t e = 0; e < topo.mesh_edges.size(); ++e) {
    const auto [i, j] = topo.mesh_edges[e];
    CHECK(in.mesh_src[2 * e] == i);
    CHECK(in.mesh_dst[2 * e] == j);
    CHECK(in.mesh_src[2 * e + 1] == j);
    CHECK(in.mesh_dst[2 * e + 1] == i);
    for (int d = 0; d < 3; ++d) {
      CHECK(in.mesh.at(2 * e, 4 + d) == q[i][d] - q[j][d]);
      CHECK(in.mesh.at(2 * e + 1, 4 + d) == -(q[i][d] - q[j][d]));
    }
    CHECK(in.mesh.at(2 * e, 7) == in.mesh.at(2 * e + 1, 7));
  }
  // contact messages run actuator -> plate only
  for (std::size_t c = 0; c < in.contact_src.size(); ++c) {
    CHECK(topo.kinds[in.contact_src[c]] == graph::NodeKind::actuator);
    CHECK(graph::is_plate(topo.kinds[in.contact_dst[c]]));
  }
}

TEST_CASE("mgn processor matches the concatenated reference") {
  const auto m = tiny_model();
  const auto topo = mgn::topology_from_bundle(tiny_bundle());
  const auto in = tiny_inputs(m, topo);
  REQUIRE(!in.contact_src.empty());
  nn::Tape tape(false);
  const auto enc = mgn::encode(m, tape, in);
  const auto got = mgn::process(m, tape, in, enc);
  const auto want = reference_process(m, tape, in, enc);
  CHECK(max_abs_diff(got.node.value(), want.node.value()) < 1e-12);
  CHECK(max_abs_diff(got.mesh.value(), want.mesh.value()) < 1e-12);
  CHECK(max_abs_diff(got.contact.value(), want.contact.value()) < 1e-12);
}

TEST_CASE("mgn zero processor is a pure residual") {
  auto m = tiny_model();
  zero_prefix(m.params, "processor.");
  const auto topo = mgn::topology_from_bundle(tiny_bundle());
  const auto in = tiny_inputs(m, topo);
  nn::Tape tape(false);
  const auto enc = mgn::encode(m, tape, in);
  const auto out = mgn::process(m, tape, in, enc);
  CHECK(nn::bitwise_equal(out.node.value(), enc.node.value()));
  CHECK(nn::bitwise_equal(out.mesh.value(), enc.mesh.value()));
  CHECK(nn::bitwise_equal(out.contact.value(), enc.contact.value()));
}

TEST_CASE("mgn two-node block by hand") {
  // One plate_free node, one actuator node, one mesh edge; latent 2 and hidden 2
  // so every product can be written out.
  std::mt19937_64 rng(4);
  mgn::MgnConfig c = tiny_config();
  c.latent = 2;
  c.hidden = 2;
  c.mp_blocks = 1;
  c.layer_norm = false;
  auto m = mgn::mgn_init(c, rng);
  const std::vector<Vec3> q0{{0, 0, 0}, {0.01, 0, 0}};
  const auto topo = mgn::make_topology(q0, {graph::NodeKind::plate_free, graph::NodeKind::actuator}, {{0, 1}}, 0.03);
  const auto raw = mgn::build_inputs(topo, q0, {{0, 0, 0}, {0, -0.001, 0}});
  REQUIRE(raw.contact_src.size() == 1);
  const auto in = raw;  // identity normalizers

  nn::Tape tape(false);
  const auto enc = mgn::encode(m, tape, in);
  const auto out = mgn::process(m, tape, in, enc);

  auto mlp = [&](const std::string& p, const std::vector<double>& x) {
    std::vector<double> h = x;
    for (int l = 0; l < 3; ++l) {
      const auto& W = m.params.value(p + ".layer" + std::to_string(l) + ".weight");
      const auto& b = m.params.value(p + ".layer" + std::to_string(l) + ".bias");
      std::vector<double> y(W.cols());
      for (std::size_t o = 0; o < W.cols(); ++o) {
        double s = b[o];
        for (std::size_t i = 0; i < W.rows(); ++i) s += h[i] * W.at(i, o);
        y[o] = l < 2 && s < 0 ? 0.01 * s : s;
      }
      h = y;
    }
    return h;
  };
  auto row = [](const nn::Var& v, std::size_t r) {
    return std::vector<double>(v.value().row(r).begin(), v.value().row(r).end());
  };
  auto cat = [](std::vector<std::vector<double>> parts) {
    std::vector<double> o;
    for (auto& p : parts) o.insert(o.end(), p.begin(), p.end());
    return o;
  };
  const auto h0 = row(enc.node, 0), h1 = row(enc.node, 1);
  // directed mesh edges: 0 -> 1 and 1 -> 0
  std::vector<std::vector<double>> e(2);
  for (int k = 0; k < 2; ++k) {
    const auto upd = mlp("processor.block0.mesh", cat({row(enc.mesh, k), k == 0 ? h0 : h1, k == 0 ? h1 : h0}));
    e[k] = row(enc.mesh, k);
    for (int d = 0; d < 2; ++d) e[k][d] += upd[d];
  }
  auto ce = row(enc.contact, 0);
  const auto cu = mlp("processor.block0.contact", cat({ce, h1, h0}));
  for (int d = 0; d < 2; ++d) ce[d] += cu[d];
  // node 0 receives mesh edge 1 -> 0 and the contact edge; node 1 receives mesh edge 0 -> 1
  const auto n0 = mlp("processor.block0.node", cat({h0, e[1], ce}));
  const auto n1 = mlp("processor.block0.node", cat({h1, e[0], {0.0, 0.0}}));
  for (int d = 0; d < 2; ++d) {
    CHECK(out.mesh.value().at(0, d) == doctest::Approx(e[0][d]).epsilon(1e-12));
    CHECK(out.mesh.value().at(1, d) == doctest::Approx(e[1][d]).epsilon(1e-12));
    CHECK(out.contact.value().at(0, d) == doctest::Approx(ce[d]).epsilon(1e-12));
    CHECK(out.node.value().at(0, d) == doctest::Approx(h0[d] + n0[d]).epsilon(1e-12));
    CHECK(out.node.value().at(1, d) == doctest::Approx(h1[d] + n1[d]).epsilon(1e-12));
  }
}

TEST_CASE("mgn isolated node sees zero aggregates") {
  std::mt19937_64 rng(8);
  auto cfg = tiny_config();
  cfg.mp_blocks = 1;
  auto m = mgn::mgn_init(cfg, rng);
  const std::vector<Vec3> q0{{0, 0, 0}, {0.01, 0, 0}, {1.0, 1.0, 0}};
  const auto topo = mgn::make_topology(q0, std::vector<graph::NodeKind>(3, graph::NodeKind::plate_free), {{0, 1}}, 0.02);
  const auto in = mgn::build_inputs(topo, q0, std::vector<Vec3>(3, Vec3{0, 0, 0}));
  CHECK(in.contact_src.empty());
  nn::Tape tape(false);
  const auto enc = mgn::encode(m, tape, in);
  const auto out = mgn::process(m, tape, in, enc);
  const auto h = enc.node.value().row(2);
  std::vector<double> x(h.begin(), h.end());
  x.resize(3 * cfg.latent, 0.0);
  nn::Tape t2(false);
  const auto upd = nn::mlp_forward(m.block_spec(), m.params, "processor.block0.node",
                                   t2.constant(nn::Tensor({1, x.size()}, x)));
  for (std::size_t d = 0; d < cfg.latent; ++d)
    CHECK(out.node.value().at(2, d) == doctest::Approx(h[d] + upd.value()[d]).epsilon(1e-12));
}

TEST_CASE("mgn zero decoder gives normalizer means") {
  auto m = tiny_model();
  zero_prefix(m.params, "decoder");
  m.target_norm = nn::Normalizer::fixed({1e-4, -2e-4, 0.0, 55.0}, {1e-3, 1e-3, 1e-3, 20.0});
  const auto topo = mgn::topology_from_bundle(tiny_bundle());
  const auto sched = mgn::schedule_from_bundle(topo, tiny_bundle());
  const auto pred = mgn::predict_step(m, topo, topo.q0, sched[0], sched[1]);
  REQUIRE(pred.shape() == nn::Shape{topo.n_nodes, 4});
  for (std::size_t i = 0; i < topo.n_nodes; ++i) {
    CHECK(pred.at(i, 0) == 1e-4);
    CHECK(pred.at(i, 1) == -2e-4);
    CHECK(pred.at(i, 2) == 0.0);
    CHECK(pred.at(i, 3) == 55.0);
  }
}

TEST_CASE("mgn step loss") {
  nn::Tape tape;
  nn::Tensor target = nn::Tensor::matrix(3, 4);
  nn::Tensor p = target;
  CHECK(mgn::step_loss(tape.constant(p), target, {0, 1, 2}).value().item() == 0.0);
  p.at(0, 0) = 1.0;
  CHECK(mgn::step_loss(tape.constant(p), target, {0}).value().item() == 1.0);
  CHECK_THROWS_AS(mgn::step_loss(tape.constant(nn::Tensor::matrix(2, 4)), target, {0}), ContractError);
  CHECK_THROWS_AS(mgn::step_loss(tape.constant(p), target, {}), ContractError);

  std::mt19937_64 rng(9);
  const auto a = test::random_tensor({7, 4}, rng), b = test::random_tensor({7, 4}, rng);
  const std::vector<int> rows{0, 2, 3, 6};
  double ref = 0.0;
  for (int r : rows)
    for (std::size_t c = 0; c < 4; ++c) ref += (a.at(r, c) - b.at(r, c)) * (a.at(r, c) - b.at(r, c));
  ref /= rows.size();
  const double got = mgn::step_loss(tape.constant(a), b, rows).value().item();
  CHECK(got == doctest::Approx(ref).epsilon(1e-14));
  CHECK(got >= 0.0);
}

TEST_CASE("mgn integrate honours constraints") {
  const auto topo = mgn::topology_from_bundle(tiny_bundle());
  REQUIRE(!topo.actuator.empty());
  std::vector<Vec3> act;
  for (int a : topo.actuator) act.push_back(topo.q0[a]);

  nn::Tensor zero = nn::Tensor::matrix(topo.n_nodes, 4);
  CHECK(mgn::integrate(topo, topo.q0, zero, act) == topo.q0);

  nn::Tensor pred(zero.shape(), 0.25);
  std::vector<Vec3> moved = act;
  for (auto& p : moved) p[2] += -0.001;
  const auto q = mgn::integrate(topo, topo.q0, pred, moved);
  for (std::size_t i = 0; i < topo.n_nodes; ++i) {
    const auto k = topo.kinds[i];
    for (int d = 0; d < 3; ++d) {
      if (k == graph::NodeKind::plate_fixed) CHECK(q[i][d] == topo.q0[i][d]);
      if (k == graph::NodeKind::plate_free) CHECK(q[i][d] == topo.q0[i][d] + 0.25);
    }
  }
  for (std::size_t k = 0; k < topo.actuator.size(); ++k) {
    const int a = topo.actuator[k];
    CHECK(q[a][0] == topo.q0[a][0]);
    CHECK(q[a][1] == topo.q0[a][1]);
    CHECK(q[a][2] == topo.q0[a][2] + -0.001);
  }
}

TEST_CASE("mgn rollout") {
  auto m = tiny_model();
  const auto& b = tiny_bundle();
  const auto topo = mgn::topology_from_bundle(b);
  const auto sched = mgn::schedule_from_bundle(topo, b);

  const auto r0 = mgn::rollout(m, topo, topo.q0, sched, 0);
  CHECK(r0.frames == 1);
  CHECK(r0.q.size() == 1);
  CHECK(r0.q[0] == topo.q0);
  CHECK_THROWS_AS(mgn::rollout(m, topo, topo.q0, sched, sched.size()), ConfigError);

  SUBCASE("zero decoder follows the actuator only") {
    zero_prefix(m.params, "decoder");
    const auto r = mgn::rollout(m, topo, topo.q0, sched, sched.size() - 1);
    for (std::size_t t = 0; t < r.frames; ++t) {
      for (int i : topo.plate) CHECK(r.q[t][i] == topo.q0[i]);
      for (std::size_t k = 0; k < topo.actuator.size(); ++k) CHECK(r.q[t][topo.actuator[k]] == sched[t][k]);
    }
  }
  SUBCASE("fixed nodes and contact sets") {
    const auto r = mgn::rollout(m, topo, topo.q0, sched, sched.size() - 1);
    REQUIRE(r.frames == sched.size());
    for (std::size_t t = 0; t < r.frames; ++t) {
      for (std::size_t i = 0; i < topo.n_nodes; ++i)
        if (topo.kinds[i] == graph::NodeKind::plate_fixed) CHECK(r.q[t][i] == topo.q0[i]);
      std::vector<Vec3> aq, pq;
      for (int a : topo.actuator) aq.push_back(r.q[t][a]);
      for (int p : topo.plate) pq.push_back(r.q[t][p]);
      std::vector<graph::Edge> want;
      for (auto [a, p] : test::brute_force_contact(aq, pq, topo.contact_radius))
        want.emplace_back(topo.actuator[a], topo.plate[p]);
      std::sort(want.begin(), want.end());
      CHECK(r.contact_edges[t] == want);
    }
  }
  SUBCASE("non-finite output reports the step") {
    m.params.value("decoder.layer2.bias")[0] = std::numeric_limits<double>::infinity();
    try {
      mgn::rollout(m, topo, topo.q0, sched, 3);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.step() == 1);
    }
  }
}

TEST_CASE("mgn rollout is translation equivariant") {
  auto m = tiny_model();
  const auto& b = tiny_bundle();
  std::vector<data::TrajectoryBundle> bs{b};
  const auto set = mgn::make_sample_set(bs, 0.04);
  mgn::fit_normalizers(m, set);
  const auto topo = mgn::topology_from_bundle(b);
  const auto sched = mgn::schedule_from_bundle(topo, b);
  const Vec3 c{1.0, 2.0, 3.0};
  auto shift = [&](std::vector<Vec3> q) {
    for (auto& p : q)
      for (int d = 0; d < 3; ++d) p[d] += c[d];
    return q;
  };
  auto topo_c = topo;
  topo_c.q0 = shift(topo.q0);
  mgn::Schedule sched_c;
  for (const auto& s : sched) sched_c.push_back(shift(s));
  const auto r = mgn::rollout(m, topo, topo.q0, sched, sched.size() - 1);
  const auto rc = mgn::rollout(m, topo_c, topo_c.q0, sched_c, sched.size() - 1);
  double dq = 0.0, ds = 0.0;
  for (std::size_t t = 0; t < r.frames; ++t)
    for (std::size_t i = 0; i < topo.n_nodes; ++i)
      for (int d = 0; d < 3; ++d) dq = std::max(dq, std::abs(rc.q[t][i][d] - c[d] - r.q[t][i][d]));
  for (std::size_t k = 0; k < r.stress.size(); ++k) ds = std::max(ds, std::abs(rc.stress[k] - r.stress[k]));
  CHECK(dq < 1e-9);
  CHECK(ds < 1e-9);
}

TEST_CASE("mgn gradients match finite differences") {
  auto m = tiny_model(21);
  const auto& b = tiny_bundle();
  std::vector<data::TrajectoryBundle> bs{b};
  const auto set = mgn::make_sample_set(bs, 0.04);
  mgn::fit_normalizers(m, set);
  std::mt19937_64 rng(1);
  const auto s = mgn::make_sample(set, 2, 4, 1e-3, &rng);
  REQUIRE(!s.inputs.contact_src.empty());
  const auto in = mgn::normalize_inputs(m, s.inputs);
  const auto target = m.target_norm.normalize(s.target);
  const auto res = test::finite_difference_check(m.params, [&](nn::Tape& t) {
    return mgn::step_loss(mgn::forward(m, t, in), target, *s.loss_rows);
  }, 1e-5, 1e-4, 6, 1, true);
  INFO(res.worst);
  CHECK(res.checked > 100);
  CHECK(res.max_rel_error < 1e-5);
}

TEST_CASE("mgn training samples") {
  const auto& b = tiny_bundle();
  std::vector<data::TrajectoryBundle> bs{b};
  const auto set = mgn::make_sample_set(bs, 0.04);
  CHECK(set.samples.size() == b.n_steps - 1);
  const auto s = mgn::make_sample(set, 1, 4, 0.0, nullptr);
  const auto q1 = b.points_at("q", 1), q2 = b.points_at("q", 2);
  const double* vm = b.step_data("sigma_vm", 2);
  for (int i : set.topo[0].plate) {
    for (int d = 0; d < 3; ++d) CHECK(s.target.at(i, d) == q2[i][d] - q1[i][d]);
    CHECK(s.target.at(i, 3) == vm[i]);
  }

  std::mt19937_64 rng(3);
  const auto noisy = mgn::make_sample(set, 1, 4, 1e-3, &rng);
  const auto& topo = set.topo[0];
  for (std::size_t i = 0; i < topo.n_nodes; ++i) {
    // target is measured from the noisy state: noisy q^t + u = q^{t+1}
    if (topo.kinds[i] == graph::NodeKind::plate_free) {
      CHECK(noisy.target.at(i, 0) != s.target.at(i, 0));
    } else if (graph::is_plate(topo.kinds[i])) {
      CHECK(noisy.target.at(i, 0) == s.target.at(i, 0));
    }
  }
}

TEST_CASE("mgn training loop") {
  const auto& b = tiny_bundle();
  std::vector<data::TrajectoryBundle> bs{b};
  const auto set = mgn::make_sample_set(bs, 0.04);

  SUBCASE("steps per epoch") {
    auto m = tiny_model();
    mgn::fit_normalizers(m, set);
    m.config.batch = 4;
    m.config.epochs = 2;
    const auto res = mgn::train(m, set, set, {});
    const std::size_t per = (set.samples.size() + 3) / 4;
    CHECK(res.steps == 2 * per);
    CHECK(res.curve.size() == 2);
  }
  SUBCASE("one small step descends") {
    auto m = tiny_model();
    mgn::fit_normalizers(m, set);
    std::vector<mgn::Sample> one{mgn::make_sample(set, 0, 4, 0.0, nullptr)};
    double before = 0.0, after = 0.0;
    const auto g = mgn::batch_gradients(m, one, 1, &before);
    nn::AdamState adam;
    adam.config.learning_rate = 1e-4;
    nn::adam_step(adam, m.params, g);
    mgn::batch_gradients(m, one, 1, &after);
    CHECK(after < before);
  }
  SUBCASE("batch gradients do not depend on jobs") {
    auto m = tiny_model();
    mgn::fit_normalizers(m, set);
    std::vector<mgn::Sample> batch;
    for (std::size_t k = 0; k < 4; ++k) batch.push_back(mgn::make_sample(set, k, 4, 0.0, nullptr));
    double l1 = 0.0, l3 = 0.0;
    const auto g1 = mgn::batch_gradients(m, batch, 1, &l1);
    const auto g3 = mgn::batch_gradients(m, batch, 3, &l3);
    CHECK(l1 == l3);
    for (const auto& [name, t] : g1) CHECK(nn::bitwise_equal(t, g3.at(name)));
  }
  SUBCASE("frozen backbone stays put") {
    auto m = tiny_model();
    mgn::fit_normalizers(m, set);
    m.params.set_frozen_prefix(mgn::backbone_prefixes(), true);
    const auto h_backbone = m.params.hash("encoder.") ^ m.params.hash("processor.");
    const auto h_decoder = m.params.hash("decoder");
    m.config.epochs = 1;
    mgn::train(m, set, set, {});
    CHECK((m.params.hash("encoder.") ^ m.params.hash("processor.")) == h_backbone);
    CHECK(m.params.hash("decoder") != h_decoder);
  }
  SUBCASE("empty dataset") {
    auto m = tiny_model();
    CHECK_THROWS_AS(mgn::train(m, mgn::SampleSet{}, set, {}), ConfigError);
    CHECK_THROWS_AS(mgn::fit_normalizers(m, mgn::SampleSet{}), ConfigError);
  }
}

TEST_CASE("mgn checkpoint round trip") {
  auto m = tiny_model();
  const auto& b = tiny_bundle();
  std::vector<data::TrajectoryBundle> bs{b};
  mgn::fit_normalizers(m, mgn::make_sample_set(bs, 0.04));
  const fs::path dir = fs::temp_directory_path() / "learnsim_mgn_ckpt";
  fs::remove_all(dir);
  nn::save_checkpoint(mgn::to_checkpoint(m), dir);
  const auto back = mgn::from_checkpoint(nn::load_checkpoint(dir));
  CHECK(back.config.to_json() == m.config.to_json());
  CHECK(back.params.hash() == m.params.hash());
  const auto topo = mgn::topology_from_bundle(b);
  const auto sched = mgn::schedule_from_bundle(topo, b);
  CHECK(nn::bitwise_equal(mgn::predict_step(m, topo, topo.q0, sched[0], sched[1]),
                          mgn::predict_step(back, topo, topo.q0, sched[0], sched[1])));

  auto c = mgn::to_checkpoint(m);
  c.meta["model"] = "tignn";
  CHECK_THROWS_AS(mgn::from_checkpoint(c), VersionError);
  fs::remove_all(dir);
}

TEST_CASE("mgn config json") {
  const auto c = tiny_config();
  CHECK(mgn::MgnConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(mgn::MgnConfig::from_json({{"latnet", 3}}), ConfigError);
  CHECK_THROWS_AS(mgn::MgnConfig::from_json({{"out_width", 5}}), ConfigError);
  CHECK_THROWS_AS(mgn::MgnConfig::from_json({{"lr", "fast"}}), ConfigError);
}

// Regenerate with LEARNSIM_UPDATE_GOLDEN=1 after an intentional numerical change.
TEST_CASE("mgn golden values") {
  auto m = tiny_model(2024);
  const auto topo = mgn::topology_from_bundle(tiny_bundle());
  const auto in = tiny_inputs(m, topo, 77);
  nn::Tape tape(false);
  const auto enc = mgn::encode(m, tape, in);
  const auto out = mgn::decode(m, tape, mgn::process(m, tape, in, enc));
  const fs::path file = fs::path(LEARNSIM_GOLDEN_DIR) / "mgn_tiny.json";
  auto dump = [](const nn::Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
  if (std::getenv("LEARNSIM_UPDATE_GOLDEN")) {
    nlohmann::json j{{"node_latents", dump(enc.node.value())}, {"decoded", dump(out.value())}};
    std::ofstream(file) << j.dump(1);
  }
  std::ifstream f(file);
  REQUIRE(f.good());
  const auto j = nlohmann::json::parse(f);
  const auto lat = j.at("node_latents").get<std::vector<double>>();
  const auto dec = j.at("decoded").get<std::vector<double>>();
  REQUIRE(lat.size() == enc.node.value().size());
  REQUIRE(dec.size() == out.value().size());
  for (std::size_t i = 0; i < lat.size(); ++i) CHECK(enc.node.value()[i] == doctest::Approx(lat[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < dec.size(); ++i) CHECK(out.value()[i] == doctest::Approx(dec[i]).epsilon(1e-12));
}
