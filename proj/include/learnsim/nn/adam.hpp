#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "learnsim/nn/parameters.hpp"

namespace learnsim::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
  std::uint64_t step = 0;
};

// One adaptive-moment update with bias correction. Frozen entries are never
// read or written. Every non-frozen entry needs a gradient of matching shape.
void adam_step(AdamState& state, ParameterStore& params, const Gradients& grads);

}  // namespace learnsim::nn
