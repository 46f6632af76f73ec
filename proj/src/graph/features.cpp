#include "learnsim/graph/features.hpp"

#include "learnsim/core/errors.hpp"

namespace learnsim::graph {

void write_distance(const Vec3& a, const Vec3& b, double* out) {
  const Vec3 d = a - b;
  out[0] = d[0];
  out[1] = d[1];
  out[2] = d[2];
  out[3] = norm(d);
}

FeatureSet solid_features(const Multigraph& g, std::span<const Vec3> q0, std::span<const Vec3> qt,
                          std::span<const Vec3> imposed_u) {
  const std::size_t n = g.n_nodes;
  if (q0.size() != n || qt.size() != n || imposed_u.size() != n || g.kinds.size() != n) {
    throw DimensionError("solid_features: arrays must have one entry per node (" + std::to_string(n) + ")");
  }
  const std::size_t kinds = kind_count(Variant::solid);
  FeatureSet f;
  f.node_features = nn::Tensor::matrix(n, kinds + kImposedDisplacementWidth);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = f.node_features.data() + i * (kinds + 3);
    row[one_hot_slot(g.kinds[i], Variant::solid)] = 1.0;
    if (!is_plate(g.kinds[i])) {
      for (int d = 0; d < 3; ++d) row[kinds + d] = imposed_u[i][d];
    }
  }
  f.mesh_edge_features = nn::Tensor::matrix(g.mesh_edges.size(), kSolidMeshEdgeWidth);
  for (std::size_t e = 0; e < g.mesh_edges.size(); ++e) {
    const auto [i, j] = g.mesh_edges[e];
    double* row = f.mesh_edge_features.data() + e * kSolidMeshEdgeWidth;
    write_distance(q0[i], q0[j], row);
    write_distance(qt[i], qt[j], row + 4);
  }
  f.contact_edge_features = nn::Tensor::matrix(g.contact_edges.size(), kSolidContactEdgeWidth);
  for (std::size_t e = 0; e < g.contact_edges.size(); ++e) {
    const auto [a, p] = g.contact_edges[e];
    write_distance(qt[a], qt[p], f.contact_edge_features.data() + e * kSolidContactEdgeWidth);
  }
  return f;
}

nn::Tensor fluid_edge_features(std::span<const Vec3> positions, const std::vector<Edge>& edges) {
  nn::Tensor out = nn::Tensor::matrix(edges.size(), kFluidEdgeWidth);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    write_distance(positions[i], positions[j], out.data() + e * kFluidEdgeWidth);
  }
  return out;
}

}  // namespace learnsim::graph
