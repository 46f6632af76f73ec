#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "learnsim/data/bundle.hpp"
#include "learnsim/graph/multigraph.hpp"
#include "learnsim/nn/autodiff.hpp"
#include "learnsim/nn/checkpoint.hpp"
#include "learnsim/nn/mlp.hpp"
#include "learnsim/nn/normalizer.hpp"

namespace learnsim::mgn {

// Output layout: 3 displacement channels followed by either the von Mises
// value (width 4) or the six Voigt stress components (width 9).
struct MgnConfig {
  std::size_t latent = 128;
  std::size_t hidden = 128;
  std::size_t mp_blocks = 15;
  std::size_t out_width = 4;
  double negative_slope = nn::kDefaultLeakySlope;
  bool layer_norm = true;
  double noise_std = 5e-4;  // 1e-3 of the plate length
  std::size_t batch = 4;
  double lr = 1e-4;
  double lr_final = 0.0;  // > 0: exponential decay from lr to lr_final over the run
  std::size_t epochs = 10;
  double contact_radius = 0.04;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static MgnConfig from_json(const nlohmann::json& j, MgnConfig defaults);
  static MgnConfig from_json(const nlohmann::json& j) { return from_json(j, MgnConfig{}); }
  void validate() const;
};

inline constexpr std::size_t kNodeFeatureWidth = 6;  // 3 kinds + imposed displacement

struct MgnModel {
  MgnConfig config;
  nn::ParameterStore params;
  nn::Normalizer node_norm{kNodeFeatureWidth}, mesh_norm{8}, contact_norm{4}, target_norm;

  nn::MlpSpec encoder_spec(std::size_t in) const;
  nn::MlpSpec block_spec() const;
  nn::MlpSpec decoder_spec() const;
};

MgnModel mgn_init(const MgnConfig& cfg, std::mt19937_64& rng);
// Decoder prefix and the frozen backbone prefixes used by transfer.
inline const std::string kDecoderPrefix = "decoder";
std::vector<std::string> backbone_prefixes();

nn::Checkpoint to_checkpoint(const MgnModel& m);
MgnModel from_checkpoint(const nn::Checkpoint& c);

// Static per-trajectory data.
struct Topology {
  std::size_t n_nodes = 0;
  std::vector<graph::NodeKind> kinds;
  std::vector<graph::Edge> mesh_edges;
  std::vector<int> plate, free, actuator;
  std::vector<graph::Vec3> q0;
  double contact_radius = 0.04;
};

Topology topology_from_bundle(const data::TrajectoryBundle& b);
Topology make_topology(const std::vector<graph::Vec3>& q0, const std::vector<graph::NodeKind>& kinds,
                       const std::vector<graph::Edge>& mesh_edges, double contact_radius);

// Raw features with each stored mesh edge expanded into both directions.
// Directed edge s -> r carries (q_s - q_r, |.|) features.
struct StepInputs {
  nn::Tensor node, mesh, contact;
  std::vector<int> mesh_src, mesh_dst, contact_src, contact_dst;
  std::size_t n_nodes = 0;
};

// imposed_u[i] is the actuator increment for actuator nodes (ignored elsewhere).
StepInputs build_inputs(const Topology& topo, const std::vector<graph::Vec3>& qt,
                        const std::vector<graph::Vec3>& imposed_u);
StepInputs normalize_inputs(const MgnModel& m, const StepInputs& raw);

struct Latents {
  nn::Var node, mesh, contact;
};

Latents encode(const MgnModel& m, nn::Tape& tape, const StepInputs& normalized);
Latents process(const MgnModel& m, nn::Tape& tape, const StepInputs& normalized, Latents l);
nn::Var decode(const MgnModel& m, nn::Tape& tape, const Latents& l);  // normalized [N, out_width]
nn::Var forward(const MgnModel& m, nn::Tape& tape, const StepInputs& normalized);

// Mean over `rows` of the squared error summed over channels (normalized space).
nn::Var step_loss(nn::Var pred, const nn::Tensor& target, const std::vector<int>& rows);

}  // namespace learnsim::mgn
