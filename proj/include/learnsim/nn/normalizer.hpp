#pragma once

#include <string>
#include <vector>

#include "learnsim/nn/parameters.hpp"
#include "learnsim/nn/tensor.hpp"

namespace learnsim::nn {

// Per-channel running statistics (Welford) and the resulting affine map.
class Normalizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  Normalizer() = default;
  explicit Normalizer(std::size_t width) : count_(0), mean_(width, 0.0), m2_(width, 0.0) {}

  std::size_t width() const noexcept { return mean_.size(); }
  std::size_t count() const noexcept { return count_; }

  void accumulate(const double* row);
  // rows of a [n, width] tensor, optionally restricted to `rows`
  void accumulate(const Tensor& x, const std::vector<int>* rows = nullptr);

  const std::vector<double>& mean() const noexcept { return mean_; }
  std::vector<double> stddev() const;

  Tensor normalize(const Tensor& x) const;
  Tensor denormalize(const Tensor& x) const;

  // As buffers "<prefix>.mean", "<prefix>.std", "<prefix>.count".
  void store(ParameterStore& buffers, const std::string& prefix) const;
  static Normalizer load(const ParameterStore& buffers, const std::string& prefix);
  // Fixed statistics (used by tests and by scale-only normalization).
  static Normalizer fixed(std::vector<double> mean, std::vector<double> stddev);

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_, m2_;
  std::vector<double> fixed_std_;
};

}  // namespace learnsim::nn
