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

namespace learnsim::tignn {

inline constexpr std::size_t kDof = 7;                 // q(3), v(3), e
inline constexpr std::size_t kOpWidth = kDof * kDof;   // flattened 7x7
inline constexpr std::size_t kNodeFeatureWidth = 6;    // one-hot (fluid, wall), v, e
inline constexpr std::size_t kEdgeFeatureWidth = 4;    // q_src - q_dst, |.|

struct TignnConfig {
  std::size_t latent = 100;
  std::size_t hidden = 100;
  std::size_t mp_blocks = 5;
  double negative_slope = nn::kDefaultLeakySlope;
  bool layer_norm = true;
  double lambda = 100.0;  // weight of the data term; 0 trains the degeneracy term alone
  double lr = 8e-4;
  std::vector<std::size_t> lr_drops{20, 30, 40};  // epochs where lr is multiplied by lr_factor
  double lr_factor = 0.1;
  std::size_t epochs = 50;
  double noise_std = 8e-4;  // in units of the per-dof state spread
  std::size_t batch = 1;
  double connectivity_radius = 0.007;
  double dt = 0.01;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static TignnConfig from_json(const nlohmann::json& j, TignnConfig defaults);
  static TignnConfig from_json(const nlohmann::json& j) { return from_json(j, TignnConfig{}); }
  void validate() const;
  double lr_at_epoch(std::size_t epoch) const;
};

// The network works in scaled coordinates z~ = z / s with s = zdot_scale.
// A diagonal change of variables keeps the skew/PSD structure, so the physical
// derivative is s * zdot~ and E, S keep their meaning.
struct TignnModel {
  TignnConfig config;
  nn::ParameterStore params;
  nn::Normalizer node_norm{kNodeFeatureWidth}, edge_norm{kEdgeFeatureWidth};
  std::vector<double> zdot_scale = std::vector<double>(kDof, 1.0);
  std::vector<double> state_spread = std::vector<double>(kDof, 1.0);  // sets the training noise per dof

  nn::MlpSpec encoder_spec(std::size_t in) const;
  nn::MlpSpec block_spec(std::size_t in) const;
  nn::MlpSpec node_head_spec() const;  // latent -> 7
  nn::MlpSpec edge_head_spec() const;  // 2 latent -> 49
};

TignnModel tignn_init(const TignnConfig& cfg, std::mt19937_64& rng);
std::vector<std::string> backbone_prefixes();

nn::Checkpoint to_checkpoint(const TignnModel& m);
TignnModel from_checkpoint(const nn::Checkpoint& c);

// Per-particle state rows [N, 7].
using State = std::vector<double>;

// Undirected edges (i < j) expanded into directed pairs 2k: i -> j and
// 2k + 1: j -> i. Both directions share operator row k.
struct PairList {
  std::size_t n_nodes = 0;
  std::vector<graph::Edge> edges;
  std::vector<int> src, dst, op;
};

PairList make_pairs(std::size_t n_nodes, std::vector<graph::Edge> edges);

struct FluidInputs {
  nn::Tensor node, edge;  // [N, 6], [2E, 4]
  PairList pairs;
};

FluidInputs build_inputs(const std::vector<graph::NodeKind>& kinds, const State& z, double r_c);
FluidInputs normalize_inputs(const TignnModel& m, const FluidInputs& raw);

// Decoded quantities, all in scaled coordinates.
struct GenericTerms {
  nn::Var dE, dS;             // [N, 7]
  nn::Var L_self, M_self;     // [N, 49]
  nn::Var L_edge, M_edge;     // [E, 49], one per undirected edge
  nn::Var m_self, m_edge;     // factors with M = m m^T
};

// L = l - l^T, M = m m^T on every row of [n, 49] inputs.
void assemble_operators(const nn::Tensor& l_flat, const nn::Tensor& m_flat, nn::Tensor& L, nn::Tensor& M);

GenericTerms generic_heads(const TignnModel& m, nn::Tape& tape, const FluidInputs& normalized);

// zdot_i = L_i dE_i + M_i dS_i - sum_j (L_ij dE_j + M_ij dS_j), j over neighbors of i.
nn::Var generic_derivative(const GenericTerms& t, const PairList& p);
// sum_i |L_i dS_i|^2 + |M_i dE_i|^2 + sum over directed pairs j -> i of |L_ij dS_j|^2 + |M_ij dE_j|^2.
nn::Var degeneracy_loss(const GenericTerms& t, const PairList& p);
// Mean over `rows` of the squared residual summed over dofs.
nn::Var data_loss(nn::Var zdot, const nn::Tensor& target, const std::vector<int>& rows);
nn::Var total_loss(nn::Var deg, nn::Var data, double lambda);

// sum_i dS_i^T M_i dS_i + sum over directed pairs of dS_j^T M_ij dS_j  (>= 0).
double entropy_production(const GenericTerms& t, const PairList& p);
// sum_i dE_i . zdot_i
double energy_rate(const GenericTerms& t, const nn::Tensor& zdot);

}  // namespace learnsim::tignn
