#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace learnsim {

// Raw little-endian float64 arrays, independent of host byte order.
void append_f64_le(std::vector<char>& out, std::span<const double> values);
std::vector<double> decode_f64_le(const char* bytes, std::size_t count);

void write_file(const std::filesystem::path& path, std::span<const char> bytes);
std::vector<char> read_file(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace learnsim
