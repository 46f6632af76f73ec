#include "learnsim/nn/parameters.hpp"

#include <cmath>
#include <cstring>

#include "learnsim/core/errors.hpp"

namespace learnsim::nn {

void ParameterStore::add(const std::string& name, Tensor value, bool frozen) {
  if (!entries_.emplace(name, ParameterEntry{std::move(value), frozen}).second) {
    throw ContractError("duplicate parameter name: " + name);
  }
}

const Tensor& ParameterStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  return it->second.value;
}

Tensor& ParameterStore::value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  return it->second.value;
}

bool ParameterStore::frozen(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  return it->second.frozen;
}

void ParameterStore::set_frozen(const std::string& name, bool frozen) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  it->second.frozen = frozen;
}

void ParameterStore::set_frozen_prefix(const std::vector<std::string>& prefixes, bool frozen) {
  for (auto& [name, entry] : entries_) {
    for (const auto& p : prefixes) {
      if (name.rfind(p, 0) == 0) {
        entry.frozen = frozen;
        break;
      }
    }
  }
}

void ParameterStore::erase_prefix(const std::string& prefix) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->first.rfind(prefix, 0) == 0) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

namespace {

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

std::uint64_t ParameterStore::hash(const std::string& prefix) const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& [name, e] : entries_) {
    if (name.rfind(prefix, 0) != 0) continue;
    fnv_mix(h, name.data(), name.size());
    for (auto d : e.value.shape()) fnv_mix(h, &d, sizeof(d));
    fnv_mix(h, e.value.data(), e.value.size() * sizeof(double));
  }
  return h;
}

Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(shape);
  // Draw from raw 64-bit outputs instead of std::uniform_real_distribution so the
  // sequence is identical across standard library implementations.
  for (auto& v : t.values()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = (2.0 * u - 1.0) * bound;
  }
  return t;
}

}  // namespace learnsim::nn
