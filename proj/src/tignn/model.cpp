#include "learnsim/tignn/model.hpp"

#include <algorithm>

#include "learnsim/core/errors.hpp"
#include "learnsim/graph/features.hpp"
#include "learnsim/graph/spatial_hash.hpp"

namespace learnsim::tignn {

using nlohmann::json;
using nn::Var;

json TignnConfig::to_json() const {
  return {{"latent", latent},     {"hidden", hidden},         {"mp_blocks", mp_blocks},
          {"negative_slope", negative_slope}, {"layer_norm", layer_norm}, {"lambda", lambda},
          {"lr", lr},             {"lr_drops", lr_drops},     {"lr_factor", lr_factor},
          {"epochs", epochs},     {"noise_std", noise_std},   {"batch", batch},
          {"connectivity_radius", connectivity_radius}, {"dt", dt}, {"seed", seed}};
}

TignnConfig TignnConfig::from_json(const json& j, TignnConfig c) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const std::vector<std::string> known{"latent", "hidden",   "mp_blocks", "negative_slope", "layer_norm",
                                              "lambda", "lr",       "lr_drops",  "lr_factor",      "epochs",
                                              "noise_std", "batch", "connectivity_radius", "dt", "seed", "model"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ConfigError("unknown tignn config key '" + k + "'");
  try {
#define LEARNSIM_FIELD(name) c.name = j.value(#name, c.name)
    LEARNSIM_FIELD(latent);
    LEARNSIM_FIELD(hidden);
    LEARNSIM_FIELD(mp_blocks);
    LEARNSIM_FIELD(negative_slope);
    LEARNSIM_FIELD(layer_norm);
    LEARNSIM_FIELD(lambda);
    LEARNSIM_FIELD(lr);
    LEARNSIM_FIELD(lr_drops);
    LEARNSIM_FIELD(lr_factor);
    LEARNSIM_FIELD(epochs);
    LEARNSIM_FIELD(noise_std);
    LEARNSIM_FIELD(batch);
    LEARNSIM_FIELD(connectivity_radius);
    LEARNSIM_FIELD(dt);
    LEARNSIM_FIELD(seed);
#undef LEARNSIM_FIELD
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad tignn config: ") + e.what());
  }
  c.validate();
  return c;
}

void TignnConfig::validate() const {
  if (latent == 0 || hidden == 0) throw ConfigError("latent and hidden sizes must be positive");
  if (!(lambda >= 0)) throw ConfigError("lambda must be non-negative");
  if (!(lr > 0) || !(lr_factor > 0)) throw ConfigError("learning rate and lr_factor must be positive");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (!(noise_std >= 0)) throw ConfigError("noise_std must be non-negative");
  if (!(connectivity_radius > 0)) throw ConfigError("connectivity radius must be positive");
  if (!(dt > 0)) throw ConfigError("dt must be positive");
}

double TignnConfig::lr_at_epoch(std::size_t epoch) const {
  double r = lr;
  for (std::size_t d : lr_drops)
    if (epoch >= d) r *= lr_factor;
  return r;
}

nn::MlpSpec TignnModel::encoder_spec(std::size_t in) const {
  return {in, config.hidden, config.latent, config.negative_slope, config.layer_norm};
}
nn::MlpSpec TignnModel::block_spec(std::size_t in) const {
  return {in, config.hidden, config.latent, config.negative_slope, config.layer_norm};
}
nn::MlpSpec TignnModel::node_head_spec() const {
  return {config.latent, config.hidden, kDof, config.negative_slope, false};
}
nn::MlpSpec TignnModel::edge_head_spec() const {
  return {2 * config.latent, config.hidden, kOpWidth, config.negative_slope, false};
}

std::vector<std::string> backbone_prefixes() { return {"encoder.", "processor."}; }

namespace {
std::string block_name(std::size_t k, const char* part) {
  return "processor.block" + std::to_string(k) + "." + part;
}

void store_vector(nn::ParameterStore& buffers, const std::string& name, const std::vector<double>& v) {
  buffers.add(name, nn::Tensor({v.size()}, v), true);
}

std::vector<double> load_vector(const nn::ParameterStore& buffers, const std::string& name) {
  const auto& t = buffers.value(name);
  if (t.size() != kDof) throw VersionError("checkpoint buffer '" + name + "' has the wrong width");
  return {t.values().begin(), t.values().end()};
}
}  // namespace

TignnModel tignn_init(const TignnConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  TignnModel m;
  m.config = cfg;
  const std::size_t L = cfg.latent;
  nn::mlp_init(m.encoder_spec(kNodeFeatureWidth), "encoder.node", m.params, rng);
  nn::mlp_init(m.encoder_spec(kEdgeFeatureWidth), "encoder.edge", m.params, rng);
  for (std::size_t k = 0; k < cfg.mp_blocks; ++k) {
    nn::mlp_init(m.block_spec(3 * L), block_name(k, "edge"), m.params, rng);
    nn::mlp_init(m.block_spec(2 * L), block_name(k, "node"), m.params, rng);
  }
  nn::mlp_init(m.node_head_spec(), "decoder.energy", m.params, rng);
  nn::mlp_init(m.node_head_spec(), "decoder.entropy", m.params, rng);
  nn::mlp_init(m.edge_head_spec(), "decoder.l", m.params, rng);
  nn::mlp_init(m.edge_head_spec(), "decoder.m", m.params, rng);
  return m;
}

nn::Checkpoint to_checkpoint(const TignnModel& m) {
  nn::Checkpoint c;
  c.meta = {{"model", "tignn"}, {"config", m.config.to_json()}};
  c.params = m.params;
  m.node_norm.store(c.buffers, "normalizer.node");
  m.edge_norm.store(c.buffers, "normalizer.edge");
  store_vector(c.buffers, "scale.zdot", m.zdot_scale);
  store_vector(c.buffers, "scale.state", m.state_spread);
  return c;
}

TignnModel from_checkpoint(const nn::Checkpoint& c) {
  if (c.meta.value("model", "") != "tignn") throw VersionError("checkpoint does not hold a tignn model");
  TignnModel m;
  m.config = TignnConfig::from_json(c.meta.at("config"));
  m.params = c.params;
  try {
    m.node_norm = nn::Normalizer::load(c.buffers, "normalizer.node");
    m.edge_norm = nn::Normalizer::load(c.buffers, "normalizer.edge");
    m.zdot_scale = load_vector(c.buffers, "scale.zdot");
    m.state_spread = load_vector(c.buffers, "scale.state");
  } catch (const VersionError&) {
    throw;
  } catch (const std::exception& e) {
    throw VersionError(std::string("checkpoint buffers incompatible: ") + e.what());
  }
  if (!m.params.contains("decoder.l.layer2.weight") ||
      m.params.value("decoder.l.layer2.weight").shape() != nn::Shape{m.config.hidden, kOpWidth})
    throw VersionError("checkpoint decoders do not match their config");
  return m;
}

PairList make_pairs(std::size_t n_nodes, std::vector<graph::Edge> edges) {
  PairList p;
  p.n_nodes = n_nodes;
  p.edges = std::move(edges);
  for (std::size_t k = 0; k < p.edges.size(); ++k) {
    const auto [i, j] = p.edges[k];
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n_nodes || static_cast<std::size_t>(j) >= n_nodes || i == j)
      throw DimensionError("pair list: bad edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    p.src.insert(p.src.end(), {i, j});
    p.dst.insert(p.dst.end(), {j, i});
    p.op.insert(p.op.end(), {static_cast<int>(k), static_cast<int>(k)});
  }
  return p;
}

FluidInputs build_inputs(const std::vector<graph::NodeKind>& kinds, const State& z, double r_c) {
  const std::size_t N = kinds.size();
  if (z.size() != N * kDof) throw DimensionError("fluid state must hold 7 values per particle");
  std::vector<graph::Vec3> q(N);
  for (std::size_t i = 0; i < N; ++i) q[i] = {z[i * kDof], z[i * kDof + 1], z[i * kDof + 2]};
  FluidInputs in;
  in.pairs = make_pairs(N, graph::radius_graph(q, r_c));
  in.node = nn::Tensor::matrix(N, kNodeFeatureWidth);
  for (std::size_t i = 0; i < N; ++i) {
    double* row = in.node.data() + i * kNodeFeatureWidth;
    row[graph::one_hot_slot(kinds[i], graph::Variant::fluid)] = 1.0;
    for (int d = 0; d < 4; ++d) row[2 + d] = z[i * kDof + 3 + d];
  }
  const auto& p = in.pairs;
  in.edge = nn::Tensor::matrix(p.src.size(), kEdgeFeatureWidth);
  for (std::size_t r = 0; r < p.src.size(); ++r)
    graph::write_distance(q[p.src[r]], q[p.dst[r]], in.edge.data() + r * kEdgeFeatureWidth);
  return in;
}

FluidInputs normalize_inputs(const TignnModel& m, const FluidInputs& raw) {
  FluidInputs n = raw;
  n.node = m.node_norm.normalize(raw.node);
  n.edge = m.edge_norm.normalize(raw.edge);
  return n;
}

void assemble_operators(const nn::Tensor& l_flat, const nn::Tensor& m_flat, nn::Tensor& L, nn::Tensor& M) {
  if (l_flat.cols() != kOpWidth || m_flat.cols() != kOpWidth || l_flat.rows() != m_flat.rows())
    throw ContractError("assemble_operators: inputs must be [n, 49]");
  nn::Tape tape(false);
  L = nn::batched_skew(tape.constant(l_flat), kDof).value();
  M = nn::batched_gram(tape.constant(m_flat), kDof).value();
}

namespace {

std::vector<int> evens(std::size_t n, int offset) {
  std::vector<int> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = static_cast<int>(2 * k) + offset;
  return v;
}

std::vector<int> endpoint(const PairList& p, bool first) {
  std::vector<int> v(p.edges.size());
  for (std::size_t k = 0; k < p.edges.size(); ++k) v[k] = first ? p.edges[k].first : p.edges[k].second;
  return v;
}

}  // namespace

GenericTerms generic_heads(const TignnModel& m, nn::Tape& tape, const FluidInputs& in) {
  const std::size_t N = in.pairs.n_nodes, E = in.pairs.edges.size();
  Var h = nn::mlp_forward(m.encoder_spec(kNodeFeatureWidth), m.params, "encoder.node", tape.constant(in.node));
  Var e = nn::mlp_forward(m.encoder_spec(kEdgeFeatureWidth), m.params, "encoder.edge", tape.constant(in.edge));
  for (std::size_t k = 0; k < m.config.mp_blocks; ++k) {
    if (E > 0) {
      const Var x = nn::concat_cols({e, nn::gather_rows(h, in.pairs.src), nn::gather_rows(h, in.pairs.dst)});
      e = nn::add(e, nn::mlp_forward(m.block_spec(3 * m.config.latent), m.params, block_name(k, "edge"), x));
    }
    const Var x = nn::concat_cols({h, nn::scatter_add_rows(e, in.pairs.dst, N)});
    h = nn::add(h, nn::mlp_forward(m.block_spec(2 * m.config.latent), m.params, block_name(k, "node"), x));
  }
  GenericTerms t;
  t.dE = nn::mlp_forward(m.node_head_spec(), m.params, "decoder.energy", h);
  t.dS = nn::mlp_forward(m.node_head_spec(), m.params, "decoder.entropy", h);

  // Self operators: the edge heads on the encoding of a zero relative-distance
  // feature paired with the node latent.
  nn::Tensor zero_raw = nn::Tensor::matrix(1, kEdgeFeatureWidth);
  const Var self_edge = nn::mlp_forward(m.encoder_spec(kEdgeFeatureWidth), m.params, "encoder.edge",
                                        tape.constant(m.edge_norm.normalize(zero_raw)));
  const Var self_in = nn::concat_cols({nn::gather_rows(self_edge, std::vector<int>(N, 0)), h});
  const auto spec = m.edge_head_spec();
  t.L_self = nn::batched_skew(nn::mlp_forward(spec, m.params, "decoder.l", self_in), kDof);
  t.m_self = nn::mlp_forward(spec, m.params, "decoder.m", self_in);
  t.M_self = nn::batched_gram(t.m_self, kDof);

  // Pair operators from direction-averaged latents, so both directions share them.
  Var pair_in;
  if (E > 0) {
    const Var e_sym = nn::scale(nn::add(nn::gather_rows(e, evens(E, 0)), nn::gather_rows(e, evens(E, 1))), 0.5);
    const Var h_sym = nn::scale(
        nn::add(nn::gather_rows(h, endpoint(in.pairs, true)), nn::gather_rows(h, endpoint(in.pairs, false))), 0.5);
    pair_in = nn::concat_cols({e_sym, h_sym});
  } else {
    pair_in = tape.constant(nn::Tensor::matrix(0, 2 * m.config.latent));
  }
  t.L_edge = nn::batched_skew(nn::mlp_forward(spec, m.params, "decoder.l", pair_in), kDof);
  t.m_edge = nn::mlp_forward(spec, m.params, "decoder.m", pair_in);
  t.M_edge = nn::batched_gram(t.m_edge, kDof);
  return t;
}

Var generic_derivative(const GenericTerms& t, const PairList& p) {
  Var z = nn::add(nn::batched_matvec(t.L_self, t.dE, kDof), nn::batched_matvec(t.M_self, t.dS, kDof));
  if (p.src.empty()) return z;
  const Var msg = nn::add(nn::batched_matvec(nn::gather_rows(t.L_edge, p.op), nn::gather_rows(t.dE, p.src), kDof),
                          nn::batched_matvec(nn::gather_rows(t.M_edge, p.op), nn::gather_rows(t.dS, p.src), kDof));
  return nn::sub(z, nn::scatter_add_rows(msg, p.dst, p.n_nodes));
}

Var degeneracy_loss(const GenericTerms& t, const PairList& p) {
  Var s = nn::add(nn::sum_squares(nn::batched_matvec(t.L_self, t.dS, kDof)),
                  nn::sum_squares(nn::batched_matvec(t.M_self, t.dE, kDof)));
  if (p.src.empty()) return s;
  s = nn::add(s, nn::sum_squares(nn::batched_matvec(nn::gather_rows(t.L_edge, p.op), nn::gather_rows(t.dS, p.src), kDof)));
  return nn::add(s,
                 nn::sum_squares(nn::batched_matvec(nn::gather_rows(t.M_edge, p.op), nn::gather_rows(t.dE, p.src), kDof)));
}

Var data_loss(Var zdot, const nn::Tensor& target, const std::vector<int>& rows) {
  if (zdot.value().shape() != target.shape()) throw DimensionError("data_loss: prediction and target shapes differ");
  if (rows.empty()) throw ContractError("data_loss: no fluid particles");
  nn::Tape& tape = *zdot.tape;
  const Var diff = nn::sub(nn::gather_rows(zdot, rows), nn::gather_rows(tape.constant(target), rows));
  return nn::scale(nn::sum_squares(diff), 1.0 / static_cast<double>(rows.size()));
}

Var total_loss(Var deg, Var data, double lambda) {
  if (!(lambda >= 0)) throw ConfigError("lambda must be non-negative");
  return nn::add(deg, nn::scale(data, lambda));
}

namespace {
// x^T (m m^T) x written as |m^T x|^2, so it cannot round below zero.
double gram_quadratic(const double* m, const double* x) {
  double s = 0.0;
  for (std::size_t k = 0; k < kDof; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i < kDof; ++i) c += m[i * kDof + k] * x[i];
    s += c * c;
  }
  return s;
}
}  // namespace

double entropy_production(const GenericTerms& t, const PairList& p) {
  const auto& ms = t.m_self.value();
  const auto& me = t.m_edge.value();
  const auto& b = t.dS.value();
  double s = 0.0;
  for (std::size_t i = 0; i < p.n_nodes; ++i) s += gram_quadratic(ms.data() + i * kOpWidth, b.data() + i * kDof);
  for (std::size_t r = 0; r < p.src.size(); ++r)
    s += gram_quadratic(me.data() + static_cast<std::size_t>(p.op[r]) * kOpWidth,
                        b.data() + static_cast<std::size_t>(p.src[r]) * kDof);
  return s;
}

double energy_rate(const GenericTerms& t, const nn::Tensor& zdot) {
  const auto& a = t.dE.value();
  if (a.shape() != zdot.shape()) throw DimensionError("energy_rate: shape mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * zdot[k];
  return s;
}

}  // namespace learnsim::tignn
