#include "learnsim/core/binary_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "learnsim/core/errors.hpp"

namespace learnsim {

void append_f64_le(std::vector<char>& out, std::span<const double> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 8);
  char* dst = out.data() + start;
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) *dst++ = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
}

std::vector<double> decode_f64_le(const char* bytes, std::size_t count) {
  std::vector<double> out(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), bytes, count * 8);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
      out[i] = std::bit_cast<double>(bits);
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw DataError("cannot open: " + path.string());
  const auto size = static_cast<std::size_t>(is.tellg());
  std::vector<char> bytes(size);
  is.seekg(0);
  is.read(bytes.data(), static_cast<std::streamsize>(size));
  if (!is) throw DataError("read failed: " + path.string());
  return bytes;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file(path, std::span<const char>(text.data(), text.size()));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace learnsim
