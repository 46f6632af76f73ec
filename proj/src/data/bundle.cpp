#include "learnsim/data/bundle.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "learnsim/core/binary_io.hpp"
#include "learnsim/core/errors.hpp"

namespace learnsim::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxElements = std::size_t{1} << 36;

std::size_t checked_product(const std::vector<std::size_t>& shape, const std::string& name) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d != 0 && n > kMaxElements / d) throw ValidationError("array '" + name + "': shape too large");
    n *= d;
  }
  return n;
}

bool safe_file_name(const std::string& f) {
  if (f.empty() || f == "." || f == ".." || f == "manifest.json") return false;
  for (char c : f)
    if (c == '/' || c == '\\' || c == '\0') return false;
  return true;
}

}  // namespace

const ArrayData& TrajectoryBundle::array(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw ValidationError("bundle has no array '" + name + "'");
  return it->second;
}

void TrajectoryBundle::set(const std::string& name, std::vector<std::size_t> shape, std::vector<double> values,
                           bool per_step) {
  arrays[name] = ArrayData{std::move(shape), std::move(values), per_step};
}

std::vector<graph::NodeKind> TrajectoryBundle::kinds() const {
  const auto& k = array("kinds");
  std::vector<graph::NodeKind> out;
  out.reserve(k.size());
  for (double v : k.values) out.push_back(graph::kind_from_code(static_cast<int>(v)));
  return out;
}

std::size_t TrajectoryBundle::step_stride(const std::string& name) const {
  const auto& a = array(name);
  if (!a.per_step) throw ContractError("array '" + name + "' is not per-step");
  return n_steps == 0 ? 0 : a.size() / n_steps;
}

const double* TrajectoryBundle::step_data(const std::string& name, std::size_t step) const {
  if (step >= n_steps) throw ContractError("step " + std::to_string(step) + " out of range");
  return array(name).values.data() + step * step_stride(name);
}

std::vector<graph::Vec3> TrajectoryBundle::points_at(const std::string& name, std::size_t step) const {
  const auto& a = array(name);
  if (a.shape.size() != 3 || a.shape[2] < 3) throw ContractError("array '" + name + "' is not [T, N, >=3]");
  const std::size_t w = a.shape[2];
  const double* p = step_data(name, step);
  std::vector<graph::Vec3> out(a.shape[1]);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {p[i * w], p[i * w + 1], p[i * w + 2]};
  return out;
}

void validate_bundle(const TrajectoryBundle& b) {
  if (b.format_version != kBundleFormatVersion)
    throw VersionError("unsupported bundle format_version " + std::to_string(b.format_version));
  if (b.family != "solid" && b.family != "fluid") throw ValidationError("family must be solid or fluid");
  if (b.n_steps < 1) throw ValidationError("n_steps must be >= 1");
  if (b.n_nodes < 1) throw ValidationError("n_nodes must be >= 1");
  if (!(b.dt > 0.0) || !std::isfinite(b.dt)) throw ValidationError("dt must be positive and finite");
  for (const auto& [name, a] : b.arrays) {
    if (!safe_file_name(name + ".f64")) throw ValidationError("invalid array name '" + name + "'");
    if (checked_product(a.shape, name) != a.values.size())
      throw ValidationError("array '" + name + "': " + std::to_string(a.values.size()) +
                            " values do not match its shape");
    if (a.per_step && (a.shape.empty() || a.shape[0] != b.n_steps))
      throw ValidationError("array '" + name + "': leading dimension must equal n_steps " +
                            std::to_string(b.n_steps));
  }
  auto it = b.arrays.find("kinds");
  if (it == b.arrays.end()) throw ValidationError("array 'kinds' is required");
  const auto& k = it->second;
  if (k.per_step || k.shape.size() != 1 || k.shape[0] != b.n_nodes)
    throw ValidationError("array 'kinds': shape must be [n_nodes]");
  for (double v : k.values) {
    if (!(v >= 0.0 && v <= 4.0) || v != std::floor(v)) throw ValidationError("array 'kinds': invalid kind code");
    const auto kind = graph::kind_from_code(static_cast<int>(v));
    const bool solid_kind = kind == graph::NodeKind::plate_free || kind == graph::NodeKind::plate_fixed ||
                            kind == graph::NodeKind::actuator;
    if (solid_kind != (b.family == "solid")) throw ValidationError("array 'kinds': kind does not fit family");
  }
  struct Required {
    const char* name;
    std::size_t width;  // 0 = [T, N]
  };
  const std::vector<Required> required =
      b.family == "fluid" ? std::vector<Required>{{"z", 7}, {"zdot", 7}}
                          : std::vector<Required>{{"q", 3}, {"u", 3}, {"sigma_vm", 0}, {"sigma", 6}};
  for (const auto& r : required) {
    auto ra = b.arrays.find(r.name);
    if (ra == b.arrays.end()) throw ValidationError(b.family + " bundle requires array '" + r.name + "'");
    const auto& a = ra->second;
    const std::vector<std::size_t> want =
        r.width ? std::vector<std::size_t>{b.n_steps, b.n_nodes, r.width} : std::vector<std::size_t>{b.n_steps, b.n_nodes};
    if (!a.per_step || a.shape != want) throw ValidationError("array '" + std::string(r.name) + "': wrong shape");
  }
  if (b.family == "solid") {
    auto c = b.arrays.find("cells");
    if (c == b.arrays.end() || c->second.per_step || c->second.shape.size() != 2)
      throw ValidationError("array 'cells': shape must be [n_cells, nodes_per_cell]");
    for (double v : c->second.values)
      if (!(v >= -1.0 && v < static_cast<double>(b.n_nodes)) || v != std::floor(v))
        throw ValidationError("array 'cells': invalid node index");
  }
}

fs::path write_bundle(const TrajectoryBundle& b, const fs::path& dir) {
  validate_bundle(b);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  json arrays = json::object();
  for (const auto& [name, a] : b.arrays) {
    const std::string file = name + ".f64";
    std::vector<char> bytes;
    append_f64_le(bytes, a.values);
    write_file(dir / file, bytes);
    arrays[name] = {{"dtype", "f64"},
                    {"shape", a.shape},
                    {"file", file},
                    {"byte_order", "little-endian"},
                    {"per_step", a.per_step}};
  }
  json m = {{"format_version", b.format_version},
            {"family", b.family},
            {"n_nodes", b.n_nodes},
            {"n_steps", b.n_steps},
            {"dt", b.dt},
            {"node_kinds", "kinds"},
            {"arrays", arrays},
            {"meta", b.meta}};
  write_json(dir / "manifest.json", m);
  return dir;
}

TrajectoryBundle read_bundle(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::is_regular_file(mpath)) throw InputError("no bundle manifest at " + mpath.string());
  const json m = read_json(mpath);
  TrajectoryBundle b;
  try {
    if (!m.is_object()) throw ValidationError("manifest must be a JSON object");
    const json& ver = m.at("format_version");
    if (!ver.is_number_integer()) throw ValidationError("format_version must be an integer");
    b.format_version = ver.get<int>();
    if (b.format_version != kBundleFormatVersion)
      throw VersionError("unsupported bundle format_version " + ver.dump());
    b.family = m.at("family").get<std::string>();
    const json& nn = m.at("n_nodes");
    const json& ns = m.at("n_steps");
    if (!nn.is_number_unsigned() || !ns.is_number_unsigned())
      throw ValidationError("n_nodes and n_steps must be non-negative integers");
    b.n_nodes = nn.get<std::size_t>();
    b.n_steps = ns.get<std::size_t>();
    if (!m.at("dt").is_number()) throw ValidationError("dt must be a number");
    b.dt = m.at("dt").get<double>();
    if (m.contains("node_kinds") && m.at("node_kinds") != "kinds")
      throw ValidationError("node_kinds must reference array 'kinds'");
    if (m.contains("meta")) b.meta = m.at("meta");
    const json& arrays = m.at("arrays");
    if (!arrays.is_object()) throw ValidationError("arrays must be an object");
    for (const auto& [name, spec] : arrays.items()) {
      if (!spec.is_object()) throw ValidationError("array '" + name + "': entry must be an object");
      if (spec.at("dtype") != "f64") throw ValidationError("array '" + name + "': dtype must be f64");
      if (spec.at("byte_order") != "little-endian")
        throw ValidationError("array '" + name + "': byte_order must be little-endian");
      const std::string file = spec.at("file").get<std::string>();
      if (!safe_file_name(file)) throw ValidationError("array '" + name + "': bad file name");
      ArrayData a;
      const json& shape = spec.at("shape");
      if (!shape.is_array()) throw ValidationError("array '" + name + "': shape must be a list");
      for (const auto& d : shape) {
        if (!d.is_number_unsigned()) throw ValidationError("array '" + name + "': bad dimension " + d.dump());
        a.shape.push_back(d.get<std::size_t>());
      }
      a.per_step = spec.value("per_step", false);
      const std::size_t n = checked_product(a.shape, name);
      const fs::path fpath = dir / file;
      if (!fs::is_regular_file(fpath)) throw TruncationError("array '" + name + "': missing file " + file);
      const auto bytes = read_file(fpath);
      if (bytes.size() < n * 8)
        throw TruncationError("array '" + name + "': " + std::to_string(bytes.size()) + " bytes, expected " +
                              std::to_string(n * 8));
      if (bytes.size() != n * 8) throw ValidationError("array '" + name + "': trailing bytes after payload");
      a.values = decode_f64_le(bytes.data(), n);
      b.arrays.emplace(name, std::move(a));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed bundle manifest: ") + e.what());
  }
  validate_bundle(b);
  return b;
}

bool bitwise_equal(const TrajectoryBundle& a, const TrajectoryBundle& b) {
  if (a.format_version != b.format_version || a.family != b.family || a.n_nodes != b.n_nodes ||
      a.n_steps != b.n_steps || std::memcmp(&a.dt, &b.dt, sizeof(double)) != 0 || a.meta != b.meta ||
      a.arrays.size() != b.arrays.size())
    return false;
  for (const auto& [name, x] : a.arrays) {
    auto it = b.arrays.find(name);
    if (it == b.arrays.end()) return false;
    const auto& y = it->second;
    if (x.shape != y.shape || x.per_step != y.per_step || x.values.size() != y.values.size()) return false;
    if (!x.values.empty() && std::memcmp(x.values.data(), y.values.data(), x.values.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

void write_splits(const SplitManifest& s, const fs::path& path) {
  write_json(path, {{"seed", s.seed}, {"train", s.train}, {"valid", s.valid}, {"test", s.test}, {"extra", s.extra}});
}

SplitManifest read_splits(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw InputError("no split manifest at " + path.string());
  const json j = read_json(path);
  SplitManifest s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.train = j.at("train").get<std::vector<std::string>>();
    s.valid = j.at("valid").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    s.extra = j.value("extra", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed split manifest: ") + e.what());
  }
  return s;
}

}  // namespace learnsim::data
