#include "learnsim/nn/checkpoint.hpp"

#include "learnsim/core/binary_io.hpp"
#include "learnsim/core/errors.hpp"

namespace learnsim::nn {

namespace fs = std::filesystem;

void save_checkpoint(const Checkpoint& ckpt, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json tensors = nlohmann::json::object();
  std::vector<char> blob;
  auto emit = [&](const ParameterStore& store, const char* role) {
    for (const auto& [name, e] : store.entries()) {
      if (tensors.contains(name)) throw ContractError("checkpoint: name used twice: " + name);
      tensors[name] = {{"shape", e.value.shape()}, {"offset", blob.size()}, {"frozen", e.frozen}, {"role", role}};
      append_f64_le(blob, e.value.values());
    }
  };
  emit(ckpt.params, "param");
  emit(ckpt.buffers, "buffer");

  nlohmann::json manifest = {{"format_version", kCheckpointFormatVersion},
                             {"dtype", "f64"},
                             {"byte_order", "little-endian"},
                             {"blob", "tensors.bin"},
                             {"blob_bytes", blob.size()},
                             {"meta", ckpt.meta},
                             {"tensors", tensors}};
  write_file(dir / "tensors.bin", blob);
  write_json(dir / "manifest.json", manifest);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw DataError("checkpoint manifest not found in " + dir.string());
  const nlohmann::json manifest = read_json(dir / "manifest.json");
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw VersionError("unsupported checkpoint format version " + manifest.at("format_version").dump());
    }
    if (manifest.at("byte_order") != "little-endian" || manifest.at("dtype") != "f64") {
      throw ValidationError("checkpoint must be little-endian f64");
    }
    const auto blob = read_file(dir / manifest.at("blob").get<std::string>());
    if (blob.size() != manifest.at("blob_bytes").get<std::size_t>()) {
      throw TruncationError("checkpoint blob has " + std::to_string(blob.size()) + " bytes, manifest says " +
                            manifest.at("blob_bytes").dump());
    }
    Checkpoint ckpt;
    ckpt.meta = manifest.at("meta");
    for (const auto& [name, t] : manifest.at("tensors").items()) {
      const Shape shape = t.at("shape").get<Shape>();
      const auto offset = t.at("offset").get<std::size_t>();
      const std::size_t count = shape_size(shape);
      if (offset % 8 != 0 || offset + count * 8 > blob.size()) {
        throw TruncationError("checkpoint tensor " + name + " lies outside the blob");
      }
      Tensor value(shape, decode_f64_le(blob.data() + offset, count));
      const std::string role = t.at("role").get<std::string>();
      ParameterStore& store = role == "buffer" ? ckpt.buffers : ckpt.params;
      store.add(name, std::move(value), t.at("frozen").get<bool>());
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed checkpoint manifest: " + std::string(e.what()));
  }
}

}  // namespace learnsim::nn
