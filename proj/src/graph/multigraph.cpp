#include "learnsim/graph/multigraph.hpp"

#include <algorithm>
#include <cmath>

#include "learnsim/core/binary_io.hpp"
#include "learnsim/core/errors.hpp"

namespace learnsim::graph {

std::size_t kind_count(Variant v) { return v == Variant::solid ? 3 : 2; }

std::size_t one_hot_slot(NodeKind kind, Variant v) {
  const int code = static_cast<int>(kind);
  if (v == Variant::solid && code <= 2) return static_cast<std::size_t>(code);
  if (v == Variant::fluid && code >= 3) return static_cast<std::size_t>(code - 3);
  throw InputError(std::string("node kind ") + kind_name(kind) + " does not belong to this graph variant");
}

bool is_plate(NodeKind k) { return k == NodeKind::plate_free || k == NodeKind::plate_fixed; }

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::plate_free: return "plate_free";
    case NodeKind::plate_fixed: return "plate_fixed";
    case NodeKind::actuator: return "actuator";
    case NodeKind::fluid: return "fluid";
    case NodeKind::wall: return "wall";
  }
  return "?";
}

NodeKind kind_from_code(int code) {
  if (code < 0 || code > 4) throw InputError("invalid node kind code " + std::to_string(code));
  return static_cast<NodeKind>(code);
}

std::vector<int> Multigraph::nodes_of_kind(NodeKind k) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] == k) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Multigraph::plate_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (is_plate(kinds[i])) out.push_back(static_cast<int>(i));
  return out;
}

Multigraph mesh_to_graph(const std::vector<Vec3>& mesh_nodes, const std::vector<std::vector<int>>& mesh_cells,
                         std::vector<NodeKind> kinds) {
  const auto n = mesh_nodes.size();
  if (kinds.empty()) kinds.assign(n, NodeKind::plate_free);
  if (kinds.size() != n) throw InputError("kinds array length differs from node count");
  Multigraph g;
  g.n_nodes = n;
  g.kinds = std::move(kinds);
  g.positions = mesh_nodes;
  g.reference_positions = mesh_nodes;
  for (std::size_t c = 0; c < mesh_cells.size(); ++c) {
    const auto& cell = mesh_cells[c];
    if (cell.size() < 2 || cell.size() > 4) {
      throw InputError("cell " + std::to_string(c) + " has unsupported size " + std::to_string(cell.size()));
    }
    for (int idx : cell) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
        throw InputError("cell " + std::to_string(c) + " references node " + std::to_string(idx) + " out of range");
      }
    }
    for (std::size_t a = 0; a < cell.size(); ++a)
      for (std::size_t b = a + 1; b < cell.size(); ++b) {
        if (cell[a] == cell[b]) continue;
        g.mesh_edges.emplace_back(std::min(cell[a], cell[b]), std::max(cell[a], cell[b]));
      }
  }
  std::sort(g.mesh_edges.begin(), g.mesh_edges.end());
  g.mesh_edges.erase(std::unique(g.mesh_edges.begin(), g.mesh_edges.end()), g.mesh_edges.end());
  return g;
}

namespace {

std::vector<double> read_array(const std::filesystem::path& base, const nlohmann::json& entry, std::size_t& rows,
                               std::size_t& cols) {
  const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
  if (shape.empty() || shape.size() > 2) throw InputError("mesh arrays must be 1-D or 2-D");
  rows = shape[0];
  cols = shape.size() == 2 ? shape[1] : 1;
  const auto bytes = read_file(base / entry.at("file").get<std::string>());
  if (bytes.size() != rows * cols * 8) {
    throw TruncationError("mesh array " + entry.at("file").get<std::string>() + " has " +
                          std::to_string(bytes.size()) + " bytes, expected " + std::to_string(rows * cols * 8));
  }
  return decode_f64_le(bytes.data(), rows * cols);
}

int as_index(double v) {
  if (v != std::floor(v) || std::abs(v) > 2e9) throw InputError("non-integer index in mesh array");
  return static_cast<int>(v);
}

}  // namespace

MeshInput read_mesh(const std::filesystem::path& manifest) {
  if (!std::filesystem::exists(manifest)) throw InputError("mesh manifest not found: " + manifest.string());
  const auto j = read_json(manifest);
  const auto base = manifest.parent_path();
  MeshInput mesh;
  try {
    std::size_t r = 0, c = 0;
    auto nodes = read_array(base, j.at("nodes"), r, c);
    if (c != 3) throw InputError("mesh nodes must have 3 columns");
    for (std::size_t i = 0; i < r; ++i) mesh.nodes.push_back({nodes[3 * i], nodes[3 * i + 1], nodes[3 * i + 2]});
    auto cells = read_array(base, j.at("cells"), r, c);
    for (std::size_t i = 0; i < r; ++i) {
      std::vector<int> cell;
      for (std::size_t k = 0; k < c; ++k) {
        const int idx = as_index(cells[i * c + k]);
        if (idx >= 0) cell.push_back(idx);  // -1 pads mixed cell sizes
      }
      mesh.cells.push_back(std::move(cell));
    }
    auto kinds = read_array(base, j.at("kinds"), r, c);
    for (double k : kinds) mesh.kinds.push_back(kind_from_code(as_index(k)));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed mesh manifest: ") + e.what());
  }
  return mesh;
}

void write_mesh(const MeshInput& mesh, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::size_t width = 0;
  for (const auto& c : mesh.cells) width = std::max(width, c.size());
  std::vector<double> nodes, cells, kinds;
  for (const auto& p : mesh.nodes) nodes.insert(nodes.end(), p.begin(), p.end());
  for (const auto& c : mesh.cells) {
    for (std::size_t k = 0; k < width; ++k) cells.push_back(k < c.size() ? c[k] : -1.0);
  }
  for (auto k : mesh.kinds) kinds.push_back(static_cast<double>(static_cast<int>(k)));
  auto dump = [&](const char* file, const std::vector<double>& v) {
    std::vector<char> bytes;
    append_f64_le(bytes, v);
    write_file(dir / file, bytes);
  };
  dump("nodes.f64", nodes);
  dump("cells.f64", cells);
  dump("kinds.f64", kinds);
  nlohmann::json j = {
      {"nodes", {{"file", "nodes.f64"}, {"shape", {mesh.nodes.size(), 3}}, {"dtype", "f64"}}},
      {"cells", {{"file", "cells.f64"}, {"shape", {mesh.cells.size(), width}}, {"dtype", "f64"}}},
      {"kinds", {{"file", "kinds.f64"}, {"shape", {mesh.kinds.size()}}, {"dtype", "f64"}}},
      {"byte_order", "little-endian"}};
  write_json(dir / "mesh.json", j);
}

}  // namespace learnsim::graph
