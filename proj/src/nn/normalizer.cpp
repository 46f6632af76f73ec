#include "learnsim/nn/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "learnsim/core/errors.hpp"

namespace learnsim::nn {

void Normalizer::accumulate(const double* row) {
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t c = 0; c < mean_.size(); ++c) {
    const double d = row[c] - mean_[c];
    mean_[c] += d / n;
    m2_[c] += d * (row[c] - mean_[c]);
  }
}

void Normalizer::accumulate(const Tensor& x, const std::vector<int>* rows) {
  if (x.rows() > 0 && x.cols() != width()) throw DimensionError("normalizer width mismatch");
  if (rows) {
    for (int r : *rows) accumulate(x.data() + static_cast<std::size_t>(r) * width());
  } else {
    for (std::size_t r = 0; r < x.rows(); ++r) accumulate(x.data() + r * width());
  }
}

std::vector<double> Normalizer::stddev() const {
  if (!fixed_std_.empty()) return fixed_std_;
  std::vector<double> s(width());
  for (std::size_t c = 0; c < width(); ++c)
    s[c] = std::max(count_ > 0 ? std::sqrt(m2_[c] / static_cast<double>(count_)) : 1.0, kStdFloor);
  return s;
}

Tensor Normalizer::normalize(const Tensor& x) const {
  if (x.rows() > 0 && x.cols() != width()) throw DimensionError("normalizer width mismatch");
  const auto s = stddev();
  Tensor y = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < width(); ++c) y.at(r, c) = (x.at(r, c) - mean_[c]) / s[c];
  return y;
}

Tensor Normalizer::denormalize(const Tensor& x) const {
  if (x.rows() > 0 && x.cols() != width()) throw DimensionError("normalizer width mismatch");
  const auto s = stddev();
  Tensor y = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < width(); ++c) y.at(r, c) = x.at(r, c) * s[c] + mean_[c];
  return y;
}

void Normalizer::store(ParameterStore& buffers, const std::string& prefix) const {
  const auto s = stddev();
  Tensor m({width()}), sd({width()}), n({1});
  for (std::size_t c = 0; c < width(); ++c) {
    m[c] = mean_[c];
    sd[c] = s[c];
  }
  n[0] = static_cast<double>(count_);
  buffers.add(prefix + ".mean", m, true);
  buffers.add(prefix + ".std", sd, true);
  buffers.add(prefix + ".count", n, true);
}

Normalizer Normalizer::load(const ParameterStore& buffers, const std::string& prefix) {
  const Tensor& m = buffers.value(prefix + ".mean");
  const Tensor& s = buffers.value(prefix + ".std");
  if (m.size() != s.size()) throw DimensionError("normalizer '" + prefix + "' has mismatched buffers");
  Normalizer out = fixed({m.values().begin(), m.values().end()}, {s.values().begin(), s.values().end()});
  if (buffers.contains(prefix + ".count")) out.count_ = static_cast<std::size_t>(buffers.value(prefix + ".count")[0]);
  return out;
}

Normalizer Normalizer::fixed(std::vector<double> mean, std::vector<double> stddev) {
  if (mean.size() != stddev.size()) throw DimensionError("normalizer mean/std width mismatch");
  Normalizer n(mean.size());
  n.mean_ = std::move(mean);
  for (auto& v : stddev) v = std::max(v, kStdFloor);
  n.fixed_std_ = std::move(stddev);
  return n;
}

}  // namespace learnsim::nn
