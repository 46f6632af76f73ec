#pragma once

#include <random>
#include <string>

#include "learnsim/nn/autodiff.hpp"
#include "learnsim/nn/parameters.hpp"

namespace learnsim::nn {

inline constexpr double kDefaultLeakySlope = 0.01;

// in -> hidden -> hidden -> out. Each hidden transformation is followed by a
// leaky rectifier and, optionally, layer normalization. The output layer is linear.
struct MlpSpec {
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t out_dim = 0;
  double negative_slope = kDefaultLeakySlope;
  bool layer_norm = false;

  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

// Adds "<prefix>.layer{0,1,2}.{weight,bias}" (and "<prefix>.norm{0,1}.{gain,bias}").
// Weights are stored [fan_in, fan_out].
void mlp_init(const MlpSpec& spec, const std::string& prefix, ParameterStore& params, std::mt19937_64& rng);

Var mlp_forward(const MlpSpec& spec, const ParameterStore& params, const std::string& prefix, Var x);

// Everything after the first affine map, given its output (x W0 + b0). Lets
// callers assemble the first layer from pieces, e.g. per-node products that
// are gathered onto edges.
Var mlp_tail(const MlpSpec& spec, const ParameterStore& params, const std::string& prefix, Var first);

}  // namespace learnsim::nn
