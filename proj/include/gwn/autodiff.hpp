// Reverse-mode differentiation on an append-only tape. A Tape lives for one
// forward/backward episode; Vars are handles into it. Nodes are created in
// topological order, so backward() is a single reverse sweep.
#pragma once

#include <functional>
#include <vector>

#include "gwn/tensor.hpp"

namespace gwn {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  const Tensor& value() const;
  const std::vector<std::size_t>& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Internal: records an op result. `backward` receives the output gradient
  // and must call accumulate() for each input that requires grad.
  Var record(Tensor value, std::vector<int> inputs, Backward backward);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  void accumulate(int id, const Tensor& g);
  // Adds g[i] to grad[id][i] without building a Tensor.
  double* grad_buffer(int id);

  // Reverse sweep from a scalar loss. Leaves keep their gradients.
  void backward(Var loss);
  // Gradient of a node after backward(); zeros if it received none.
  Tensor grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until something flows in
    std::vector<int> inputs;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// --- ops; all inputs must live on the same tape ---

// [n,k] x [k,m]
Var matmul(Var a, Var b);
// Same-shape elementwise ops.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// [n,m] + [1,m] broadcast over rows.
Var add_row(Var a, Var row);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var elu(Var a);
Var softplus(Var a);
Var square(Var a);
Var sqrt(Var a);
Var concat_cols(const std::vector<Var>& parts);
std::vector<Var> split_cols(Var a, const std::vector<std::size_t>& widths);
Var sum(Var a);
Var mean(Var a);
Var sum_of_squares(Var a);
// Forward rounds half away from zero; backward passes the gradient through.
Var st_quantize(Var a);
// Forward clamps to [lo, hi]; backward passes the gradient through unchanged.
Var st_clamp(Var a, double lo, double hi);
// Elementwise: a where a == b, else 0. Gradient splits evenly between both
// inputs at matching positions and is dropped at mismatches.
Var combine_y0(Var a, Var b);
// Elementwise -log2 of the discretised Gaussian mass of integer y under
// (mean, scale), floored at `floor`.
Var gaussian_bits(Var y, Var mean, Var scale, double floor);
// Mean softmax cross-entropy (nats) of [n,k] logits against labels.
Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);
// Broadcast a [1,m] row to [n,m].
Var repeat_rows(Var row, std::size_t n);

// Discretised Gaussian mass of integer y: Phi((y+1/2-mu)/s) - Phi((y-1/2-mu)/s),
// evaluated on the tail that keeps precision.
double gaussian_mass(double y, double mu, double s);

}  // namespace gwn
