#pragma once

#include <span>
#include <vector>

#include "learnsim/graph/multigraph.hpp"
#include "learnsim/nn/tensor.hpp"

namespace learnsim::graph {

inline constexpr std::size_t kSolidMeshEdgeWidth = 8;
inline constexpr std::size_t kSolidContactEdgeWidth = 4;
inline constexpr std::size_t kImposedDisplacementWidth = 3;
inline constexpr std::size_t kFluidEdgeWidth = 4;

struct FeatureSet {
  nn::Tensor node_features;          // [n_nodes, kinds + 3]
  nn::Tensor mesh_edge_features;     // [n_mesh_edges, 8], one row per stored (i < j) edge
  nn::Tensor contact_edge_features;  // [n_contact_edges, 4]
};

// (d, |d|) with d = a - b.
void write_distance(const Vec3& a, const Vec3& b, double* out);

// Mesh edge (i, j): (q0_i - q0_j, |.|, qt_i - qt_j, |.|). Contact edge (a, p):
// (qt_a - qt_p, |.|). Node: (one-hot kind, imposed displacement), with the
// displacement forced to zero on plate nodes.
FeatureSet solid_features(const Multigraph& g, std::span<const Vec3> q0, std::span<const Vec3> qt,
                          std::span<const Vec3> imposed_u);

// Relative distance vector and its norm for each undirected edge.
nn::Tensor fluid_edge_features(std::span<const Vec3> positions, const std::vector<Edge>& edges);

}  // namespace learnsim::graph
