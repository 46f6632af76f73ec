#include "learnsim/nn/mlp.hpp"

#include "learnsim/core/errors.hpp"

namespace learnsim::nn {

void MlpSpec::validate() const {
  if (in_dim == 0 || hidden_dim == 0 || out_dim == 0) {
    throw ConfigError("mlp dimensions must be positive (in " + std::to_string(in_dim) + ", hidden " +
                      std::to_string(hidden_dim) + ", out " + std::to_string(out_dim) + ")");
  }
}

void mlp_init(const MlpSpec& spec, const std::string& prefix, ParameterStore& params, std::mt19937_64& rng) {
  spec.validate();
  const std::size_t dims[4] = {spec.in_dim, spec.hidden_dim, spec.hidden_dim, spec.out_dim};
  for (int l = 0; l < 3; ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    params.add(base + ".weight", uniform_init({dims[l], dims[l + 1]}, dims[l], rng));
    params.add(base + ".bias", uniform_init({dims[l + 1]}, dims[l], rng));
  }
  if (spec.layer_norm) {
    for (int l = 0; l < 2; ++l) {
      const std::string base = prefix + ".norm" + std::to_string(l);
      params.add(base + ".gain", Tensor({spec.hidden_dim}, 1.0));
      params.add(base + ".bias", Tensor({spec.hidden_dim}, 0.0));
    }
  }
}

namespace {

Var hidden_activation(const MlpSpec& spec, const ParameterStore& params, const std::string& prefix, int l, Var h) {
  h = leaky_relu(h, spec.negative_slope);
  if (!spec.layer_norm) return h;
  Tape& tape = *h.tape;
  const std::string nb = prefix + ".norm" + std::to_string(l);
  return layer_norm(h, tape.parameter(params, nb + ".gain"), tape.parameter(params, nb + ".bias"));
}

Var dense(const ParameterStore& params, const std::string& prefix, int l, Var h) {
  Tape& tape = *h.tape;
  const std::string base = prefix + ".layer" + std::to_string(l);
  Var w = tape.parameter(params, base + ".weight");
  Var b = tape.parameter(params, base + ".bias");
  if (w.value().rows() != h.value().cols()) {
    throw DimensionError("mlp '" + prefix + "': weight " + base + ".weight has shape " +
                         shape_string(w.value().shape()) + " for input width " + std::to_string(h.value().cols()));
  }
  return add_bias(matmul(h, w), b);
}

}  // namespace

Var mlp_forward(const MlpSpec& spec, const ParameterStore& params, const std::string& prefix, Var x) {
  if (x.value().cols() != spec.in_dim) {
    throw DimensionError("mlp '" + prefix + "': input " + shape_string(x.value().shape()) + " but in_dim is " +
                         std::to_string(spec.in_dim));
  }
  return mlp_tail(spec, params, prefix, dense(params, prefix, 0, x));
}

Var mlp_tail(const MlpSpec& spec, const ParameterStore& params, const std::string& prefix, Var first) {
  Var h = hidden_activation(spec, params, prefix, 0, first);
  h = hidden_activation(spec, params, prefix, 1, dense(params, prefix, 1, h));
  return dense(params, prefix, 2, h);
}

}  // namespace learnsim::nn
