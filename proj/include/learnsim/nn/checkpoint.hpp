#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "learnsim/nn/parameters.hpp"

namespace learnsim::nn {

inline constexpr int kCheckpointFormatVersion = 1;

// On disk: <dir>/manifest.json lists every tensor as
// name -> {shape, offset (bytes), frozen, role}, and <dir>/tensors.bin holds one
// little-endian float64 blob. `buffers` carry non-trainable state such as
// normalizer statistics.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  ParameterStore params;
  ParameterStore buffers;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace learnsim::nn
