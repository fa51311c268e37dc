#pragma once

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records one forward pass. Every op appends a node holding its output value
// and a backward rule; node ids therefore form a topological order and backward()
// replays them in reverse. Leaves created from external tensors (model parameters)
// add their gradient into Tensor::grad() at the end of each backward() call, so
// repeated calls accumulate until the owner zeroes them.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t node)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Value that takes no gradient (inputs, targets).
  Var constant(Tensor value);
  // Differentiable leaf that reads `tensor` in place; `tensor` must outlive the tape.
  Var leaf(Tensor& tensor);
  Var leaf(Parameter& parameter) { return leaf(parameter.tensor); }
  // Reads `tensor` in place without tracking gradients (inference on shared models).
  Var constant_ref(const Tensor& tensor);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() loss with respect to v; empty if v was not reached.
  std::span<const double> grad(Var v) const;
  bool requires_grad(Var v) const;

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  // Every node's inputs precede it on the tape.
  bool is_topologically_ordered() const;

  // Test hook: makes matmul report twice the true weight gradient.
  void set_corrupt_backward(bool on) { corrupt_backward_ = on; }
  bool corrupt_backward() const { return corrupt_backward_; }

  // Op authoring interface.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);
  const std::vector<Var>& inputs(std::size_t node) const { return nodes_[node].inputs; }
  std::span<const double> node_grad(std::size_t node) const { return nodes_[node].grad; }
  // Gradient buffer of an input, allocated on first use; empty span if it needs no gradient.
  std::span<double> grad_buffer(Var v);

 private:
  struct Node {
    Tensor value;
    Tensor* external = nullptr;
    const Tensor* external_const = nullptr;
    std::vector<Var> inputs;
    BackwardFn backward;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  const Tensor& node_value(const Node& node) const {
    if (node.external != nullptr) return *node.external;
    if (node.external_const != nullptr) return *node.external_const;
    return node.value;
  }
  void check(Var v) const;

  std::vector<Node> nodes_;
  bool corrupt_backward_ = false;
};

enum class Unary { Exp, Log, Square, Reciprocal, Sigmoid };

// a[m x k] * b[k x n]
Var matmul(Tape& tape, Var a, Var b);
// x[m x n] + bias[n] broadcast over rows
Var add_bias(Tape& tape, Var x, Var bias);
// relu(x); the subgradient at exactly 0 is 0.
Var relu(Tape& tape, Var x);
Var unary(Tape& tape, Var x, Unary op);
inline Var exp(Tape& tape, Var x) { return unary(tape, x, Unary::Exp); }
inline Var log(Tape& tape, Var x) { return unary(tape, x, Unary::Log); }
inline Var square(Tape& tape, Var x) { return unary(tape, x, Unary::Square); }
inline Var reciprocal(Tape& tape, Var x) { return unary(tape, x, Unary::Reciprocal); }
inline Var sigmoid(Tape& tape, Var x) { return unary(tape, x, Unary::Sigmoid); }
// Elementwise clamp into [lo, hi]; gradient passes only inside the closed interval.
Var clamp(Tape& tape, Var x, double lo, double hi);

// Elementwise binary ops on tensors of identical shape.
Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double factor);
Var add_scalar(Tape& tape, Var x, double offset);

Var reduce_mean(Tape& tape, Var x);
Var reduce_sum(Tape& tape, Var x);
Var reshape(Tape& tape, Var x, Shape shape);

// Per-row -log softmax(logits)[label]; logits[m x K], returns [m].
Var softmax_cross_entropy(Tape& tape, Var logits, std::span<const std::size_t> labels);

}  // namespace dae
