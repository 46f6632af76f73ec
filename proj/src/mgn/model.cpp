#include "learnsim/mgn/model.hpp"

#include "learnsim/core/errors.hpp"
#include "learnsim/graph/features.hpp"
#include "learnsim/graph/spatial_hash.hpp"

namespace learnsim::mgn {

using nlohmann::json;
using nn::Var;

json MgnConfig::to_json() const {
  return {{"latent", latent},       {"hidden", hidden},   {"mp_blocks", mp_blocks},
          {"out_width", out_width}, {"negative_slope", negative_slope}, {"layer_norm", layer_norm},
          {"noise_std", noise_std}, {"batch", batch},     {"lr", lr},
          {"lr_final", lr_final},   {"epochs", epochs},   {"contact_radius", contact_radius},
          {"seed", seed}};
}

MgnConfig MgnConfig::from_json(const json& j, MgnConfig c) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const std::vector<std::string> known{"latent", "hidden",    "mp_blocks", "out_width", "negative_slope",
                                              "layer_norm", "noise_std", "batch", "lr", "lr_final",
                                              "epochs", "contact_radius", "seed", "model"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown mgn config key '" + k + "'");
  try {
#define LEARNSIM_FIELD(name) c.name = j.value(#name, c.name)
    LEARNSIM_FIELD(latent);
    LEARNSIM_FIELD(hidden);
    LEARNSIM_FIELD(mp_blocks);
    LEARNSIM_FIELD(out_width);
    LEARNSIM_FIELD(negative_slope);
    LEARNSIM_FIELD(layer_norm);
    LEARNSIM_FIELD(noise_std);
    LEARNSIM_FIELD(batch);
    LEARNSIM_FIELD(lr);
    LEARNSIM_FIELD(lr_final);
    LEARNSIM_FIELD(epochs);
    LEARNSIM_FIELD(contact_radius);
    LEARNSIM_FIELD(seed);
#undef LEARNSIM_FIELD
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad mgn config: ") + e.what());
  }
  c.validate();
  return c;
}

void MgnConfig::validate() const {
  if (latent == 0 || hidden == 0) throw ConfigError("latent and hidden sizes must be positive");
  if (out_width != 4 && out_width != 9) throw ConfigError("out_width must be 4 (von Mises) or 9 (stress tensor)");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (!(lr > 0) || lr_final < 0) throw ConfigError("learning rate must be positive");
  if (!(noise_std >= 0)) throw ConfigError("noise_std must be non-negative");
  if (!(contact_radius > 0)) throw ConfigError("contact radius must be positive");
}

nn::MlpSpec MgnModel::encoder_spec(std::size_t in) const {
  return {in, config.hidden, config.latent, config.negative_slope, config.layer_norm};
}
nn::MlpSpec MgnModel::block_spec() const {
  return {3 * config.latent, config.hidden, config.latent, config.negative_slope, config.layer_norm};
}
nn::MlpSpec MgnModel::decoder_spec() const {
  return {config.latent, config.hidden, config.out_width, config.negative_slope, false};
}

std::vector<std::string> backbone_prefixes() { return {"encoder.", "processor."}; }

namespace {
std::string block_name(std::size_t k, const char* part) {
  return "processor.block" + std::to_string(k) + "." + part;
}
}  // namespace

MgnModel mgn_init(const MgnConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  MgnModel m;
  m.config = cfg;
  nn::mlp_init(m.encoder_spec(kNodeFeatureWidth), "encoder.node", m.params, rng);
  nn::mlp_init(m.encoder_spec(8), "encoder.mesh", m.params, rng);
  nn::mlp_init(m.encoder_spec(4), "encoder.contact", m.params, rng);
  for (std::size_t k = 0; k < cfg.mp_blocks; ++k) {
    nn::mlp_init(m.block_spec(), block_name(k, "mesh"), m.params, rng);
    nn::mlp_init(m.block_spec(), block_name(k, "contact"), m.params, rng);
    nn::mlp_init(m.block_spec(), block_name(k, "node"), m.params, rng);
  }
  nn::mlp_init(m.decoder_spec(), kDecoderPrefix, m.params, rng);
  m.target_norm = nn::Normalizer(cfg.out_width);
  return m;
}

nn::Checkpoint to_checkpoint(const MgnModel& m) {
  nn::Checkpoint c;
  c.meta = {{"model", "mgn"}, {"config", m.config.to_json()}};
  c.params = m.params;
  m.node_norm.store(c.buffers, "normalizer.node");
  m.mesh_norm.store(c.buffers, "normalizer.mesh");
  m.contact_norm.store(c.buffers, "normalizer.contact");
  m.target_norm.store(c.buffers, "normalizer.target");
  return c;
}

MgnModel from_checkpoint(const nn::Checkpoint& c) {
  if (c.meta.value("model", "") != "mgn") throw VersionError("checkpoint does not hold an mgn model");
  MgnModel m;
  m.config = MgnConfig::from_json(c.meta.at("config"));
  m.params = c.params;
  try {
    m.node_norm = nn::Normalizer::load(c.buffers, "normalizer.node");
    m.mesh_norm = nn::Normalizer::load(c.buffers, "normalizer.mesh");
    m.contact_norm = nn::Normalizer::load(c.buffers, "normalizer.contact");
    m.target_norm = nn::Normalizer::load(c.buffers, "normalizer.target");
  } catch (const std::exception& e) {
    throw VersionError(std::string("checkpoint normalizer buffers incompatible: ") + e.what());
  }
  if (m.target_norm.width() != m.config.out_width) throw VersionError("target normalizer width mismatch");
  const auto dec = m.decoder_spec();
  if (!m.params.contains("decoder.layer2.weight") ||
      m.params.value("decoder.layer2.weight").shape() != nn::Shape{dec.hidden_dim, dec.out_dim})
    throw VersionError("checkpoint decoder does not match its config");
  return m;
}

Topology make_topology(const std::vector<graph::Vec3>& q0, const std::vector<graph::NodeKind>& kinds,
                       const std::vector<graph::Edge>& mesh_edges, double contact_radius) {
  if (q0.size() != kinds.size()) throw DimensionError("topology: one kind per node required");
  Topology t;
  t.n_nodes = q0.size();
  t.kinds = kinds;
  t.mesh_edges = mesh_edges;
  t.q0 = q0;
  t.contact_radius = contact_radius;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (graph::is_plate(kinds[i])) t.plate.push_back(static_cast<int>(i));
    if (kinds[i] == graph::NodeKind::plate_free) t.free.push_back(static_cast<int>(i));
    if (kinds[i] == graph::NodeKind::actuator) t.actuator.push_back(static_cast<int>(i));
  }
  return t;
}

Topology topology_from_bundle(const data::TrajectoryBundle& b) {
  if (b.family != "solid") throw DataError("mgn needs a solid bundle");
  const auto& cells = b.array("cells");
  std::vector<std::vector<int>> cl;
  const std::size_t w = cells.shape[1];
  for (std::size_t c = 0; c < cells.shape[0]; ++c) {
    std::vector<int> cell;
    for (std::size_t k = 0; k < w; ++k) {
      const double v = cells.values[c * w + k];
      if (v >= 0) cell.push_back(static_cast<int>(v));
    }
    cl.push_back(cell);
  }
  const auto q0 = b.points_at("q", 0);
  const auto g = graph::mesh_to_graph(q0, cl, b.kinds());
  return make_topology(q0, b.kinds(), g.mesh_edges, b.meta.value("contact_radius", 0.04));
}

StepInputs build_inputs(const Topology& topo, const std::vector<graph::Vec3>& qt,
                        const std::vector<graph::Vec3>& imposed_u) {
  if (qt.size() != topo.n_nodes || imposed_u.size() != topo.n_nodes)
    throw DimensionError("build_inputs: arrays must have one entry per node");
  graph::Multigraph g;
  g.n_nodes = topo.n_nodes;
  g.kinds = topo.kinds;
  g.mesh_edges = topo.mesh_edges;
  g.positions = qt;
  g.reference_positions = topo.q0;
  graph::rebuild_contact_edges(g, topo.contact_radius);
  const auto f = graph::solid_features(g, topo.q0, qt, imposed_u);
  StepInputs in;
  in.n_nodes = topo.n_nodes;
  in.node = f.node_features;
  const std::size_t M = g.mesh_edges.size();
  in.mesh = nn::Tensor::matrix(2 * M, 8);
  in.mesh_src.resize(2 * M);
  in.mesh_dst.resize(2 * M);
  for (std::size_t e = 0; e < M; ++e) {
    const auto [i, j] = g.mesh_edges[e];
    in.mesh_src[2 * e] = i;
    in.mesh_dst[2 * e] = j;
    in.mesh_src[2 * e + 1] = j;
    in.mesh_dst[2 * e + 1] = i;
    for (int k = 0; k < 8; ++k) {
      const double v = f.mesh_edge_features.at(e, k);
      const bool is_norm = k == 3 || k == 7;
      in.mesh.at(2 * e, k) = v;
      in.mesh.at(2 * e + 1, k) = is_norm ? v : -v;
    }
  }
  in.contact = f.contact_edge_features;
  for (auto [a, p] : g.contact_edges) {
    in.contact_src.push_back(a);
    in.contact_dst.push_back(p);
  }
  return in;
}

StepInputs normalize_inputs(const MgnModel& m, const StepInputs& raw) {
  StepInputs n = raw;
  n.node = m.node_norm.normalize(raw.node);
  n.mesh = m.mesh_norm.normalize(raw.mesh);
  n.contact = m.contact_norm.normalize(raw.contact);
  return n;
}

Latents encode(const MgnModel& m, nn::Tape& tape, const StepInputs& in) {
  Latents l;
  l.node = nn::mlp_forward(m.encoder_spec(kNodeFeatureWidth), m.params, "encoder.node", tape.constant(in.node));
  l.mesh = nn::mlp_forward(m.encoder_spec(8), m.params, "encoder.mesh", tape.constant(in.mesh));
  l.contact = nn::mlp_forward(m.encoder_spec(4), m.params, "encoder.contact", tape.constant(in.contact));
  return l;
}

namespace {

// First layer of an edge block on [e, h_src, h_dst]: the node parts of the
// weight are applied per node and then gathered, which is cheaper than
// multiplying the concatenated edge rows.
Var edge_block(const MgnModel& m, const std::string& prefix, Var edge, Var node, const std::vector<int>& src,
               const std::vector<int>& dst) {
  nn::Tape& tape = *edge.tape;
  const std::size_t L = m.config.latent;
  const Var w = tape.parameter(m.params, prefix + ".layer0.weight");
  const Var b = tape.parameter(m.params, prefix + ".layer0.bias");
  Var pre = nn::matmul(edge, nn::slice_rows(w, 0, L));
  if (!src.empty()) {
    pre = nn::add(pre, nn::gather_rows(nn::matmul(node, nn::slice_rows(w, L, 2 * L)), src));
    pre = nn::add(pre, nn::gather_rows(nn::matmul(node, nn::slice_rows(w, 2 * L, 3 * L)), dst));
  }
  return nn::add(edge, nn::mlp_tail(m.block_spec(), m.params, prefix, nn::add_bias(pre, b)));
}

}  // namespace

Latents process(const MgnModel& m, nn::Tape& tape, const StepInputs& in, Latents l) {
  (void)tape;
  const auto spec = m.block_spec();
  for (std::size_t k = 0; k < m.config.mp_blocks; ++k) {
    const Var mesh = edge_block(m, block_name(k, "mesh"), l.mesh, l.node, in.mesh_src, in.mesh_dst);
    const Var contact = edge_block(m, block_name(k, "contact"), l.contact, l.node, in.contact_src, in.contact_dst);
    const Var node_in = nn::concat_cols({l.node, nn::scatter_add_rows(mesh, in.mesh_dst, in.n_nodes),
                                         nn::scatter_add_rows(contact, in.contact_dst, in.n_nodes)});
    l.node = nn::add(l.node, nn::mlp_forward(spec, m.params, block_name(k, "node"), node_in));
    l.mesh = mesh;
    l.contact = contact;
  }
  return l;
}

Var decode(const MgnModel& m, nn::Tape&, const Latents& l) {
  return nn::mlp_forward(m.decoder_spec(), m.params, kDecoderPrefix, l.node);
}

Var forward(const MgnModel& m, nn::Tape& tape, const StepInputs& in) {
  return decode(m, tape, process(m, tape, in, encode(m, tape, in)));
}

Var step_loss(Var pred, const nn::Tensor& target, const std::vector<int>& rows) {
  const auto& pv = pred.value();
  if (target.shape() != pv.shape()) throw ContractError("step_loss: prediction and target shapes differ");
  if (rows.empty()) throw ContractError("step_loss: no plate nodes");
  nn::Tape& tape = *pred.tape;
  const Var diff = nn::sub(nn::gather_rows(pred, rows), nn::gather_rows(tape.constant(target), rows));
  return nn::scale(nn::sum_squares(diff), 1.0 / static_cast<double>(rows.size()));
}

}  // namespace learnsim::mgn
