#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "learnsim/graph/multigraph.hpp"

namespace learnsim::data {

inline constexpr int kBundleFormatVersion = 1;

struct ArrayData {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool per_step = false;  // leading dimension is n_steps

  std::size_t size() const { return values.size(); }
};

// One trajectory on disk: manifest.json plus one raw little-endian f64 file per array.
//
// solid arrays: kinds [N], cells [C, 3], q [T, N, 3], u [T, N, 3] (q - q^0),
//   sigma_vm [T, N], sigma [T, N, 6] (xx, yy, zz, xy, yz, xz), residual [T]
// fluid arrays: kinds [N], z [T, N, 7] (q, v, e), zdot [T, N, 7]
struct TrajectoryBundle {
  int format_version = kBundleFormatVersion;
  std::string family;  // "solid" | "fluid"
  std::size_t n_nodes = 0;
  std::size_t n_steps = 0;
  double dt = 1.0;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, ArrayData> arrays;

  bool has(const std::string& name) const { return arrays.count(name) > 0; }
  const ArrayData& array(const std::string& name) const;
  void set(const std::string& name, std::vector<std::size_t> shape, std::vector<double> values, bool per_step);

  std::vector<graph::NodeKind> kinds() const;
  // Row `step` of a [T, N, 3] array as points.
  std::vector<graph::Vec3> points_at(const std::string& name, std::size_t step) const;
  // Pointer to the start of row `step` of a per-step array.
  const double* step_data(const std::string& name, std::size_t step) const;
  std::size_t step_stride(const std::string& name) const;
};

// Throws ValidationError naming the offending array or field.
void validate_bundle(const TrajectoryBundle& b);

std::filesystem::path write_bundle(const TrajectoryBundle& b, const std::filesystem::path& dir);
// Errors: InputError (missing manifest), VersionError, TruncationError (short payload),
// ValidationError (anything else malformed).
TrajectoryBundle read_bundle(const std::filesystem::path& dir);

bool bitwise_equal(const TrajectoryBundle& a, const TrajectoryBundle& b);

// Train/valid/test/extra membership by bundle directory name.
struct SplitManifest {
  std::vector<std::string> train, valid, test, extra;
  std::uint64_t seed = 0;
};

void write_splits(const SplitManifest& s, const std::filesystem::path& path);
SplitManifest read_splits(const std::filesystem::path& path);

}  // namespace learnsim::data
