#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "learnsim/core/random.hpp"
#include "learnsim/nn/autodiff.hpp"
#include "learnsim/nn/parameters.hpp"

namespace learnsim::test {

inline nn::Tensor random_tensor(const nn::Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(shape);
  for (auto& v : t.values()) v = uniform(rng, lo, hi);
  return t;
}

// Compares tape gradients of every trainable entry with central differences
// (optionally the five-point stencil, for losses large enough that rounding
// in the two-point quotient matters).
// Relative error is |ad - fd| / max(|ad|, |fd|, floor); the floor keeps
// components that are zero up to rounding from dominating.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

inline GradCheckResult finite_difference_check(nn::ParameterStore& params,
                                               const std::function<nn::Var(nn::Tape&)>& loss_fn, double h = 1e-6,
                                               double floor = 1e-4, std::size_t max_per_tensor = 0,
                                               std::uint64_t seed = 1, bool fourth_order = false) {
  nn::Tape tape;
  nn::Var loss = loss_fn(tape);
  tape.backward(loss);
  const nn::Gradients grads = tape.parameter_gradients();
  auto eval = [&]() {
    nn::Tape t(false);
    return loss_fn(t).value().item();
  };
  GradCheckResult result;
  std::mt19937_64 rng(seed);
  for (auto& [name, entry] : params.entries()) {
    if (entry.frozen) continue;
    const nn::Tensor& g = grads.at(name);
    std::vector<std::size_t> idx(entry.value.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (max_per_tensor > 0 && idx.size() > max_per_tensor) {
      deterministic_shuffle(idx, rng);
      idx.resize(max_per_tensor);
    }
    for (std::size_t i : idx) {
      const double orig = entry.value[i];
      auto at = [&](double step) {
        entry.value[i] = orig + step;
        const double f = eval();
        entry.value[i] = orig;
        return f;
      };
      const double d1 = at(h) - at(-h);
      const double fd = fourth_order ? (8.0 * d1 - (at(2 * h) - at(-2 * h))) / (12.0 * h) : d1 / (2.0 * h);
      const double ad = g[i];
      const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), floor});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        char buf[96];
        std::snprintf(buf, sizeof buf, "] ad=%.6e fd=%.6e", ad, fd);
        result.worst = name + "[" + std::to_string(i) + buf;
      }
    }
  }
  return result;
}

}  // namespace learnsim::test

#include "learnsim/graph/multigraph.hpp"

namespace learnsim::test {

// O(n^2) oracles for the hashed neighbor searches.
inline std::vector<graph::Edge> brute_force_radius(const std::vector<graph::Vec3>& q, double r) {
  std::vector<graph::Edge> out;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i + 1; j < q.size(); ++j)
      if (graph::squared_distance(q[i], q[j]) < r * r) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return out;
}

inline std::vector<graph::Edge> brute_force_contact(const std::vector<graph::Vec3>& act,
                                                    const std::vector<graph::Vec3>& plate, double r) {
  std::vector<graph::Edge> out;
  for (std::size_t a = 0; a < act.size(); ++a)
    for (std::size_t p = 0; p < plate.size(); ++p)
      if (graph::squared_distance(act[a], plate[p]) < r * r) out.emplace_back(static_cast<int>(a), static_cast<int>(p));
  return out;
}

inline std::vector<graph::Vec3> random_cloud(std::size_t n, std::mt19937_64& rng, double extent,
                                             graph::Vec3 origin = {0, 0, 0}) {
  std::vector<graph::Vec3> q(n);
  for (auto& p : q)
    for (int d = 0; d < 3; ++d) p[d] = origin[d] + uniform(rng, 0.0, extent);
  return q;
}

}  // namespace learnsim::test
