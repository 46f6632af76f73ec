#include "learnsim/graph/spatial_hash.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "learnsim/core/errors.hpp"

namespace learnsim::graph {

namespace {
constexpr int kAxisBits = 21;
constexpr std::int64_t kAxisMask = (std::int64_t{1} << kAxisBits) - 1;
constexpr std::int64_t kDenseCellsPerPoint = 8;
}  // namespace

SpatialHashGrid::SpatialHashGrid(std::span<const Vec3> points, double cell_size) : cell_(cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ConfigError("hash cell size must be positive");
  const std::size_t n = points.size();
  if (n == 0) {
    cell_start_.push_back(0);
    return;
  }
  Vec3 hi = points[0];
  origin_ = points[0];
  for (const auto& p : points)
    for (int d = 0; d < 3; ++d) {
      origin_[d] = std::min(origin_[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  double total = 1.0;
  for (int d = 0; d < 3; ++d) {
    const double cells = std::floor((hi[d] - origin_[d]) / cell_) + 1.0;
    total *= cells;
    dims_[d] = total <= double(kDenseCellsPerPoint * n + 1024) ? static_cast<std::int64_t>(cells) : 0;
  }
  dense_ = total <= double(kDenseCellsPerPoint * n + 1024);

  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t x = axis_cell(points[i][0], 0), y = axis_cell(points[i][1], 1), z = axis_cell(points[i][2], 2);
    keys[i] = dense_ ? static_cast<std::uint64_t>((x * dims_[1] + y) * dims_[2] + z) : key_of(x, y, z);
  }
  order_.resize(n);
  if (dense_) {
    // counting sort keeps indices ascending within a cell
    const auto ncell = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
    cell_start_.assign(ncell + 1, 0);
    for (auto k : keys) ++cell_start_[k + 1];
    for (std::size_t c = 0; c < ncell; ++c) cell_start_[c + 1] += cell_start_[c];
    std::vector<int> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) order_[fill[keys[i]]++] = static_cast<int>(i);
  } else {
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(),
              [&](int a, int b) { return keys[a] != keys[b] ? keys[a] < keys[b] : a < b; });
    for (std::size_t s = 0; s < n; ++s) {
      const auto k = keys[order_[s]];
      if (s == 0 || k != cell_keys_.back()) {
        cell_keys_.push_back(k);
        cell_start_.push_back(static_cast<int>(s));
      }
    }
    cell_start_.push_back(static_cast<int>(n));
  }
  sorted_.resize(n);
  for (std::size_t s = 0; s < n; ++s) sorted_[s] = points[order_[s]];
}

std::size_t SpatialHashGrid::cell_count() const noexcept {
  if (!dense_) return cell_keys_.size();
  std::size_t occupied = 0;
  for (std::size_t c = 0; c + 1 < cell_start_.size(); ++c) occupied += cell_start_[c + 1] > cell_start_[c];
  return occupied;
}

std::int64_t SpatialHashGrid::axis_cell(double x, int d) const {
  return static_cast<std::int64_t>(std::floor((x - origin_[d]) / cell_));
}

std::uint64_t SpatialHashGrid::key_of(std::int64_t x, std::int64_t y, std::int64_t z) {
  // 21 bits per axis; far-apart cells that wrap onto the same key only cost
  // extra distance tests, never missed neighbors.
  constexpr std::int64_t bias = std::int64_t{1} << 20;
  const auto ux = static_cast<std::uint64_t>((x + bias) & kAxisMask);
  const auto uy = static_cast<std::uint64_t>((y + bias) & kAxisMask);
  const auto uz = static_cast<std::uint64_t>((z + bias) & kAxisMask);
  return (ux << 42) | (uy << 21) | uz;
}

void SpatialHashGrid::scan(int s, int e, const Vec3& p, double r2, std::vector<int>& out) const {
  for (; s < e; ++s)
    if (squared_distance(sorted_[s], p) < r2) out.push_back(order_[s]);
}

void SpatialHashGrid::query(const Vec3& p, double r, std::vector<int>& out) const {
  out.clear();
  if (sorted_.empty()) return;
  const double r2 = r * r;
  // Cell window from a slightly widened box, so rounding in the cell
  // arithmetic can only add candidates; the distance test stays exact.
  const double w = r * (1.0 + 1e-9) + 1e-300;
  std::array<std::int64_t, 3> lo, hi;
  for (int d = 0; d < 3; ++d) {
    lo[d] = axis_cell(p[d] - w, d);
    hi[d] = axis_cell(p[d] + w, d);
  }
  if (dense_) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::max<std::int64_t>(lo[d], 0);
      hi[d] = std::min<std::int64_t>(hi[d], dims_[d] - 1);
      if (lo[d] > hi[d]) return;
    }
    for (std::int64_t x = lo[0]; x <= hi[0]; ++x)
      for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
        const std::int64_t base = (x * dims_[1] + y) * dims_[2];
        scan(cell_start_[base + lo[2]], cell_start_[base + hi[2] + 1], p, r2, out);
      }
  } else if (hi[0] - lo[0] >= kAxisMask || hi[1] - lo[1] >= kAxisMask || hi[2] - lo[2] >= kAxisMask) {
    // the window covers the whole wrapped key space
    scan(0, static_cast<int>(sorted_.size()), p, r2, out);
  } else {
    auto run = [&](std::uint64_t from, std::uint64_t to) {
      auto c = std::lower_bound(cell_keys_.begin(), cell_keys_.end(), from) - cell_keys_.begin();
      auto e = c;
      while (e < std::ssize(cell_keys_) && cell_keys_[e] <= to) ++e;
      scan(cell_start_[c], cell_start_[e], p, r2, out);
    };
    const auto mask = static_cast<std::uint64_t>(kAxisMask);
    const std::uint64_t z_lo = key_of(0, 0, lo[2]) & mask, z_hi = key_of(0, 0, hi[2]) & mask;
    for (std::int64_t x = lo[0]; x <= hi[0]; ++x)
      for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
        const std::uint64_t column = key_of(x, y, 0) & ~mask;
        if (z_lo <= z_hi) {
          run(column | z_lo, column | z_hi);
        } else {
          run(column, column | z_hi);
          run(column | z_lo, column | mask);
        }
      }
  }
  std::sort(out.begin(), out.end());
}

std::vector<Edge> build_contact_edges(std::span<const Vec3> actuator_q, std::span<const Vec3> plate_q,
                                      double r_contact) {
  if (!(r_contact > 0.0)) throw ConfigError("contact radius must be positive");
  std::vector<Edge> edges;
  if (actuator_q.empty() || plate_q.empty()) return edges;
  SpatialHashGrid grid(plate_q, r_contact);
  std::vector<int> hits;
  for (std::size_t a = 0; a < actuator_q.size(); ++a) {
    grid.query(actuator_q[a], r_contact, hits);
    for (int p : hits) edges.emplace_back(static_cast<int>(a), p);
  }
  return edges;
}

void rebuild_contact_edges(Multigraph& g, double r_contact) {
  const auto act = g.nodes_of_kind(NodeKind::actuator);
  const auto plate = g.plate_nodes();
  std::vector<Vec3> aq, pq;
  for (int i : act) aq.push_back(g.positions[i]);
  for (int i : plate) pq.push_back(g.positions[i]);
  auto local = build_contact_edges(aq, pq, r_contact);
  g.contact_edges.clear();
  g.contact_edges.reserve(local.size());
  for (auto [a, p] : local) g.contact_edges.emplace_back(act[a], plate[p]);
  std::sort(g.contact_edges.begin(), g.contact_edges.end());
}

std::vector<Edge> radius_graph(std::span<const Vec3> positions, double r) {
  if (!(r > 0.0)) throw ConfigError("connectivity radius must be positive");
  std::vector<Edge> edges;
  if (positions.empty()) return edges;
  SpatialHashGrid grid(positions, r);
  std::vector<int> hits;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    grid.query(positions[i], r, hits);
    for (int j : hits)
      if (j > static_cast<int>(i)) edges.emplace_back(static_cast<int>(i), j);
  }
  return edges;
}

}  // namespace learnsim::graph
