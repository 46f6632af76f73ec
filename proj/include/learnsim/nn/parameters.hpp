#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "learnsim/nn/tensor.hpp"

namespace learnsim::nn {

struct ParameterEntry {
  Tensor value;
  bool frozen = false;
};

// Named weight tensors keyed by hierarchical names ("encoder.node.layer0.weight").
// std::map keeps iteration in a canonical order, which checkpoints and the
// optimizer rely on for determinism.
class ParameterStore {
 public:
  void add(const std::string& name, Tensor value, bool frozen = false);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }

  const Tensor& value(const std::string& name) const;
  Tensor& value(const std::string& name);
  bool frozen(const std::string& name) const;
  void set_frozen(const std::string& name, bool frozen);
  // Freezes (or unfreezes) every entry whose name starts with one of the prefixes.
  void set_frozen_prefix(const std::vector<std::string>& prefixes, bool frozen);
  void erase_prefix(const std::string& prefix);

  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  const std::map<std::string, ParameterEntry>& entries() const noexcept { return entries_; }
  std::map<std::string, ParameterEntry>& entries() noexcept { return entries_; }

  // Stable 64-bit FNV-1a hash over names, shapes and raw bytes of the selected entries.
  std::uint64_t hash(const std::string& prefix = "") const;

 private:
  std::map<std::string, ParameterEntry> entries_;
};

using Gradients = std::map<std::string, Tensor>;

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace learnsim::nn
