#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <utility>
#include <vector>

#include "learnsim/nn/tensor.hpp"

namespace learnsim::graph {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}

enum class NodeKind : int { plate_free = 0, plate_fixed = 1, actuator = 2, fluid = 3, wall = 4 };
enum class Variant { solid, fluid };

std::size_t kind_count(Variant v);
// Slot of `kind` inside the one-hot block of `v`; throws if the kind does not belong to v.
std::size_t one_hot_slot(NodeKind kind, Variant v);
bool is_plate(NodeKind k);
const char* kind_name(NodeKind k);
NodeKind kind_from_code(int code);

using Edge = std::pair<int, int>;

// G(V, E^M, E^C). Mesh edges are undirected and stored once as (min, max);
// contact edges are directed actuator -> plate. Both lists are sorted.
struct Multigraph {
  std::size_t n_nodes = 0;
  std::vector<NodeKind> kinds;
  std::vector<Edge> mesh_edges;
  std::vector<Edge> contact_edges;
  std::vector<Vec3> positions;
  std::vector<Vec3> reference_positions;

  std::vector<int> nodes_of_kind(NodeKind k) const;
  std::vector<int> plate_nodes() const;
};

// Cells are node-index lists; every pair of nodes inside a cell shares a boundary
// edge for 2-node lines, triangles and 4-node tetrahedra. Kinds default to plate_free.
Multigraph mesh_to_graph(const std::vector<Vec3>& mesh_nodes, const std::vector<std::vector<int>>& mesh_cells,
                         std::vector<NodeKind> kinds = {});

struct MeshInput {
  std::vector<Vec3> nodes;
  std::vector<std::vector<int>> cells;
  std::vector<NodeKind> kinds;
};

// JSON manifest {"nodes": {file, shape}, "cells": {...}, "kinds": {...}} with raw
// little-endian float64 payloads (integer arrays stored as exact float64 values).
MeshInput read_mesh(const std::filesystem::path& manifest);
void write_mesh(const MeshInput& mesh, const std::filesystem::path& dir);

}  // namespace learnsim::graph
