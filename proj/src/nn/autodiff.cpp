#include "learnsim/nn/autodiff.hpp"

#include <Eigen/Core>
#include <cmath>

#include "learnsim/core/errors.hpp"

namespace learnsim::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

ConstMapMat as_matrix(const Tensor& t) {
  return ConstMapMat(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

MapMat as_matrix(Tensor& t) {
  return MapMat(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw ContractError("vars belong to different tapes");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) { return push(std::move(value), true, nullptr); }

Var Tape::parameter(const ParameterStore& store, const std::string& name) {
  if (auto it = param_ids_.find(name); it != param_ids_.end()) return Var{this, it->second};
  const bool trainable = !store.frozen(name);
  Var v = push(store.value(name), trainable, nullptr);
  param_ids_.emplace(name, v.id);
  if (nodes_[v.id].requires_grad) params_.emplace_back(name, v.id);
  return v;
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && n.value.size() > 0) n.grad = Tensor(n.value.shape(), 0.0);
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_string(nodes_[loss.id].value.shape()));
  }
  if (!record_) throw ContractError("backward on a non-recording tape");
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    // The closure only writes other nodes' buffers, so the gradient can be
    // lent out and put back afterwards.
    Tensor g = std::move(n.grad);
    n.backward(*this, g);
    nodes_[i].grad = std::move(g);
  }
}

Gradients Tape::parameter_gradients() const {
  Gradients out;
  for (const auto& [name, id] : params_) {
    const Node& n = nodes_[id];
    out.emplace(name, n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad);
  }
  return out;
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  same_tape(a, b);
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows() || B.rank() > 2) {
    throw DimensionError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
  }
  Tensor out = Tensor::matrix(A.rows(), B.cols());
  as_matrix(out).noalias() = as_matrix(A) * as_matrix(B);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) as_matrix(tp.grad_buffer(a.id)).noalias() += as_matrix(g) * as_matrix(b.value()).transpose();
    if (tp.requires_grad(b)) as_matrix(tp.grad_buffer(b.id)).noalias() += as_matrix(a.value()).transpose() * as_matrix(g);
  });
}

Var add_bias(Var x, Var bias) {
  same_tape(x, bias);
  Tape& t = *x.tape;
  const Tensor& X = x.value();
  const Tensor& B = bias.value();
  if (B.size() != X.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(B.shape()) + " for input " + shape_string(X.shape()));
  }
  Tensor out = X;
  const std::size_t n = X.rows(), m = X.cols();
  for (std::size_t r = 0; r < n; ++r) {
    double* row = out.data() + r * m;
    for (std::size_t c = 0; c < m; ++c) row[c] += B[c];
  }
  const bool rg = t.requires_grad(x) || t.requires_grad(bias);
  return t.push(std::move(out), rg, [x, bias, n, m](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) {
      Tensor& gx = tp.grad_buffer(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (tp.requires_grad(bias)) {
      Tensor& gb = tp.grad_buffer(bias.id);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) gb[c] += g[r * m + c];
    }
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  Tape& t = *a.tape;
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const Tensor& g) {
    for (Var v : {a, b}) {
      if (!tp.requires_grad(v)) continue;
      Tensor& gv = tp.grad_buffer(v.id);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  Tape& t = *a.tape;
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_buffer(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  Tape& t = *a.tape;
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_buffer(a.id);
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_buffer(b.id);
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var x, double s) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (auto& v : out.values()) v *= s;
  return t.push(std::move(out), t.requires_grad(x), [x, s](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
  });
}

Var scale_cols(Var x, const std::vector<double>& col_scale) {
  Tape& t = *x.tape;
  const std::size_t m = x.value().cols();
  if (col_scale.size() != m) throw DimensionError("scale_cols: width mismatch");
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= col_scale[i % m];
  return t.push(std::move(out), t.requires_grad(x), [x, col_scale, m](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += col_scale[i % m] * g[i];
  });
}

Var leaky_relu(Var x, double negative_slope) {
  Tape& t = *x.tape;
  Tensor out = x.value();
  for (auto& v : out.values()) v = v >= 0.0 ? v : negative_slope * v;
  return t.push(std::move(out), t.requires_grad(x), [x, negative_slope](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] >= 0.0 ? g[i] : negative_slope * g[i];
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  same_tape(x, gain);
  same_tape(x, bias);
  Tape& t = *x.tape;
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), m = X.cols();
  if (gain.value().size() != m || bias.value().size() != m) throw DimensionError("layer_norm: affine width mismatch");
  Tensor xhat(X.shape());
  std::vector<double> inv_std(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = X.data() + r * m;
    double mean = 0.0;
    for (std::size_t c = 0; c < m; ++c) mean += xr[c];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t c = 0; c < m; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<double>(m);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < m; ++c) xhat[r * m + c] = (xr[c] - mean) * inv_std[r];
  }
  Tensor out(X.shape());
  const Tensor& G = gain.value();
  const Tensor& B = bias.value();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = xhat[r * m + c] * G[c] + B[c];
  const bool rg = t.requires_grad(x) || t.requires_grad(gain) || t.requires_grad(bias);
  return t.push(std::move(out), rg,
                [x, gain, bias, n, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp, const Tensor& g) {
                  const Tensor& G = gain.value();
                  if (tp.requires_grad(gain)) {
                    Tensor& gg = tp.grad_buffer(gain.id);
                    for (std::size_t i = 0; i < g.size(); ++i) gg[i % m] += g[i] * xhat[i];
                  }
                  if (tp.requires_grad(bias)) {
                    Tensor& gb = tp.grad_buffer(bias.id);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i % m] += g[i];
                  }
                  if (tp.requires_grad(x)) {
                    Tensor& gx = tp.grad_buffer(x.id);
                    const double inv_m = 1.0 / static_cast<double>(m);
                    for (std::size_t r = 0; r < n; ++r) {
                      double mean_d = 0.0, mean_dx = 0.0;
                      for (std::size_t c = 0; c < m; ++c) {
                        const double d = g[r * m + c] * G[c];
                        mean_d += d;
                        mean_dx += d * xhat[r * m + c];
                      }
                      mean_d *= inv_m;
                      mean_dx *= inv_m;
                      for (std::size_t c = 0; c < m; ++c) {
                        const double d = g[r * m + c] * G[c];
                        gx[r * m + c] += inv_std[r] * (d - mean_d - xhat[r * m + c] * mean_dx);
                      }
                    }
                  }
                });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t n = parts.front().value().rows();
  std::size_t total = 0;
  bool rg = false;
  for (Var p : parts) {
    same_tape(parts.front(), p);
    if (p.value().rows() != n) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(p.value().shape()) + " vs " +
                           std::to_string(n) + " rows");
    }
    total += p.value().cols();
    rg = rg || t.requires_grad(p);
  }
  Tensor out = Tensor::matrix(n, total);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& P = p.value();
    const std::size_t w = P.cols();
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(P.data() + r * w, w, out.data() + r * total + offset);
    offset += w;
  }
  return t.push(std::move(out), rg, [parts, n, total](Tape& tp, const Tensor& g) {
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t w = p.value().cols();
      if (tp.requires_grad(p)) {
        Tensor& gp = tp.grad_buffer(p.id);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < w; ++c) gp[r * w + c] += g[r * total + off + c];
      }
      off += w;
    }
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& t = *x.tape;
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), m = X.cols();
  if (begin > end || end > m) throw DimensionError("slice_cols: range out of bounds");
  const std::size_t w = end - begin;
  Tensor out = Tensor::matrix(n, w);
  for (std::size_t r = 0; r < n; ++r) std::copy_n(X.data() + r * m + begin, w, out.data() + r * w);
  return t.push(std::move(out), t.requires_grad(x), [x, begin, n, m, w](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < w; ++c) gx[r * m + begin + c] += g[r * w + c];
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& t = *x.tape;
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), m = X.cols();
  if (begin > end || end > n || X.rank() != 2) throw DimensionError("slice_rows: range out of bounds");
  Tensor out({end - begin, m}, std::vector<double>(X.data() + begin * m, X.data() + end * m));
  return t.push(std::move(out), t.requires_grad(x), [x, begin, m](Tape& tp, const Tensor& g) {
    double* gx = tp.grad_buffer(x.id).data() + begin * m;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var gather_rows(Var x, const std::vector<int>& index) {
  Tape& t = *x.tape;
  const Tensor& X = x.value();
  const std::size_t m = X.cols();
  const std::size_t n = X.rows();
  Tensor out = Tensor::matrix(index.size(), m);
  for (std::size_t k = 0; k < index.size(); ++k) {
    const auto src = static_cast<std::size_t>(index[k]);
    if (index[k] < 0 || src >= n) throw DimensionError("gather_rows: index out of range");
    std::copy_n(X.data() + src * m, m, out.data() + k * m);
  }
  return t.push(std::move(out), t.requires_grad(x), [x, index, m](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    for (std::size_t k = 0; k < index.size(); ++k) {
      double* dst = gx.data() + static_cast<std::size_t>(index[k]) * m;
      const double* src = g.data() + k * m;
      for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
    }
  });
}

Var scatter_add_rows(Var x, const std::vector<int>& index, std::size_t out_rows) {
  Tape& t = *x.tape;
  const Tensor& X = x.value();
  const std::size_t m = X.cols();
  if (index.size() != X.rows()) throw DimensionError("scatter_add_rows: index length differs from rows");
  Tensor out = Tensor::matrix(out_rows, m);
  for (std::size_t k = 0; k < index.size(); ++k) {
    const auto dst_row = static_cast<std::size_t>(index[k]);
    if (index[k] < 0 || dst_row >= out_rows) throw DimensionError("scatter_add_rows: index out of range");
    double* dst = out.data() + dst_row * m;
    const double* src = X.data() + k * m;
    for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
  }
  return t.push(std::move(out), t.requires_grad(x), [x, index, m](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    for (std::size_t k = 0; k < index.size(); ++k) {
      const double* src = g.data() + static_cast<std::size_t>(index[k]) * m;
      double* dst = gx.data() + k * m;
      for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
    }
  });
}

Var sum(Var x) {
  Tape& t = *x.tape;
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return t.push(Tensor::scalar(s), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    for (auto& v : gx.values()) v += g[0];
  });
}

Var sum_squares(Var x) {
  Tape& t = *x.tape;
  double s = 0.0;
  for (double v : x.value().values()) s += v * v;
  return t.push(Tensor::scalar(s), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x.id);
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += 2.0 * xv[i] * g[0];
  });
}

Var batched_skew(Var a, std::size_t d) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  if (A.cols() != d * d) throw DimensionError("batched_skew: expected width " + std::to_string(d * d));
  const std::size_t n = A.rows(), w = d * d;
  Tensor out = Tensor::matrix(n, w);
  for (std::size_t r = 0; r < n; ++r) {
    const double* ar = A.data() + r * w;
    double* o = out.data() + r * w;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) o[i * d + j] = ar[i * d + j] - ar[j * d + i];
  }
  return t.push(std::move(out), t.requires_grad(a), [a, d, n, w](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t r = 0; r < n; ++r) {
      const double* gr = g.data() + r * w;
      double* o = ga.data() + r * w;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) o[i * d + j] += gr[i * d + j] - gr[j * d + i];
    }
  });
}

Var batched_gram(Var a, std::size_t d) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  if (A.cols() != d * d) throw DimensionError("batched_gram: expected width " + std::to_string(d * d));
  const std::size_t n = A.rows(), w = d * d;
  Tensor out = Tensor::matrix(n, w);
  for (std::size_t r = 0; r < n; ++r) {
    const double* ar = A.data() + r * w;
    double* o = out.data() + r * w;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += ar[i * d + k] * ar[j * d + k];
        o[i * d + j] = s;
        o[j * d + i] = s;
      }
    }
  }
  return t.push(std::move(out), t.requires_grad(a), [a, d, n, w](Tape& tp, const Tensor& g) {
    // d(A A^T) : G  ->  (G + G^T) A
    Tensor& ga = tp.grad_buffer(a.id);
    const Tensor& A = a.value();
    for (std::size_t r = 0; r < n; ++r) {
      const double* gr = g.data() + r * w;
      const double* ar = A.data() + r * w;
      double* o = ga.data() + r * w;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) {
          double s = 0.0;
          for (std::size_t j = 0; j < d; ++j) s += (gr[i * d + j] + gr[j * d + i]) * ar[j * d + k];
          o[i * d + k] += s;
        }
    }
  });
}

Var batched_matvec(Var a, Var x, std::size_t d) {
  same_tape(a, x);
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  const Tensor& X = x.value();
  if (A.cols() != d * d || X.cols() != d || A.rows() != X.rows()) {
    throw DimensionError("batched_matvec: " + shape_string(A.shape()) + " with " + shape_string(X.shape()));
  }
  const std::size_t n = A.rows(), w = d * d;
  Tensor out = Tensor::matrix(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const double* ar = A.data() + r * w;
    const double* xr = X.data() + r * d;
    double* o = out.data() + r * d;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += ar[i * d + j] * xr[j];
      o[i] = s;
    }
  }
  const bool rg = t.requires_grad(a) || t.requires_grad(x);
  return t.push(std::move(out), rg, [a, x, d, n, w](Tape& tp, const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& X = x.value();
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_buffer(a.id);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) ga[r * w + i * d + j] += g[r * d + i] * X[r * d + j];
    }
    if (tp.requires_grad(x)) {
      Tensor& gx = tp.grad_buffer(x.id);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < d; ++i) s += A[r * w + i * d + j] * g[r * d + i];
          gx[r * d + j] += s;
        }
    }
  });
}

}  // namespace learnsim::nn
