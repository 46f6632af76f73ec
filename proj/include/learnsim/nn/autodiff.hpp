#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "learnsim/nn/parameters.hpp"
#include "learnsim/nn/tensor.hpp"

namespace learnsim::nn {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  bool valid() const noexcept { return tape != nullptr && id >= 0; }
};

// Reverse-mode tape. Each op appends a node holding its forward value and a
// closure that pushes the node's gradient to its inputs. One tape per sample
// (and per thread); nothing here is shared.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}

  Var constant(Tensor value);
  // Gradient-carrying leaf that is not a named parameter (used by tests).
  Var variable(Tensor value);
  // Leaf bound to a store entry. Frozen entries become constants and therefore
  // never receive gradients. Repeated calls return the same node.
  Var parameter(const ParameterStore& store, const std::string& name);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  // Empty tensor when no gradient reached the node.
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  void backward(Var loss);
  Gradients parameter_gradients() const;

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;
  // Op implementation hook: record a node, keeping the closure only when
  // gradients can flow through it.
  Var push(Tensor value, bool requires_grad, Backward backward);
  Tensor& grad_buffer(int id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_ids_;
  std::vector<std::pair<std::string, int>> params_;
};

// ---- Ops. All 2-D ops read tensors as (rows() x cols()) matrices. ----

Var matmul(Var a, Var b);                       // [n,k] x [k,m]
Var add_bias(Var x, Var bias);                  // [n,m] + [m]
Var add(Var a, Var b);                          // same shape
Var sub(Var a, Var b);                          // same shape
Var mul(Var a, Var b);                          // elementwise, same shape
Var scale(Var x, double s);
Var scale_cols(Var x, const std::vector<double>& col_scale);
Var leaky_relu(Var x, double negative_slope);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var slice_rows(Var x, std::size_t begin, std::size_t end);  // 2-D only
Var gather_rows(Var x, const std::vector<int>& index);
Var scatter_add_rows(Var x, const std::vector<int>& index, std::size_t out_rows);
Var sum(Var x);          // scalar
Var sum_squares(Var x);  // scalar

// Batched small-matrix ops; each row holds one row-major d x d matrix.
Var batched_skew(Var a, std::size_t d);          // row -> A - A^T
Var batched_gram(Var a, std::size_t d);          // row -> A A^T
Var batched_matvec(Var a, Var x, std::size_t d); // row i -> A_i x_i

}  // namespace learnsim::nn
