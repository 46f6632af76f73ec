#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "learnsim/graph/multigraph.hpp"

namespace learnsim::graph {

// Uniform grid over a fixed point set. Points are stored in cell order, z
// innermost, so a run of cells along z is one contiguous slice. Compact
// clouds use a dense cell array; sparse ones fall back to sorted packed keys.
// Build once, then query read-only (safe from several threads).
class SpatialHashGrid {
 public:
  SpatialHashGrid(std::span<const Vec3> points, double cell_size);

  double cell_size() const noexcept { return cell_; }
  std::size_t cell_count() const noexcept;
  bool dense() const noexcept { return dense_; }

  // Indices j with |points[j] - p| < r, ascending.
  void query(const Vec3& p, double r, std::vector<int>& out) const;

 private:
  std::int64_t axis_cell(double x, int d) const;
  static std::uint64_t key_of(std::int64_t x, std::int64_t y, std::int64_t z);
  void scan(int s, int e, const Vec3& p, double r2, std::vector<int>& out) const;

  double cell_;
  Vec3 origin_{};
  std::array<std::int64_t, 3> dims_{};  // dense mode only
  bool dense_ = false;
  std::vector<Vec3> sorted_;            // points in cell order
  std::vector<int> order_;              // sorted_[s] == points[order_[s]]
  std::vector<std::uint64_t> cell_keys_;  // sparse mode: occupied cells, ascending
  std::vector<int> cell_start_;         // cell c owns [cell_start_[c], cell_start_[c + 1])
};

// Directed pairs (a, p) of local indices with |actuator_q[a] - plate_q[p]| < r_contact,
// sorted by (a, p).
std::vector<Edge> build_contact_edges(std::span<const Vec3> actuator_q, std::span<const Vec3> plate_q,
                                      double r_contact);

// Recomputes g.contact_edges (global indices) from the current positions.
void rebuild_contact_edges(Multigraph& g, double r_contact);

// Undirected pairs (i, j), i < j, with |q_i - q_j| < r; no self pairs; sorted.
std::vector<Edge> radius_graph(std::span<const Vec3> positions, double r);

}  // namespace learnsim::graph
