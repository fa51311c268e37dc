#include "dae/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dae/error.hpp"
#include "dae/kernels.hpp"
#include "dae/numeric.hpp"

namespace dae {

void Tape::check(Var v) const {
  if (v.id >= nodes_.size()) throw Error("variable " + std::to_string(v.id) + " is not on this tape");
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Tensor& tensor) {
  Node node;
  node.external = &tensor;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::constant_ref(const Tensor& tensor) {
  Node node;
  node.external_const = &tensor;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (Var in : inputs) {
    check(in);
    node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return node_value(nodes_[v.id]);
}

std::span<const double> Tape::grad(Var v) const {
  check(v);
  return nodes_[v.id].grad;
}

bool Tape::requires_grad(Var v) const {
  check(v);
  return nodes_[v.id].requires_grad;
}

std::span<double> Tape::grad_buffer(Var v) {
  check(v);
  Node& node = nodes_[v.id];
  if (!node.requires_grad) return {};
  if (node.grad.empty()) node.grad.assign(node_value(node).size(), 0.0);
  return node.grad;
}

bool Tape::is_topologically_ordered() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (Var in : nodes_[i].inputs)
      if (in.id >= i) return false;
  return true;
}

void Tape::backward(Var loss) {
  check(loss);
  if (value(loss).size() != 1)
    throw ShapeError("backward needs a scalar loss, got shape " + shape_to_string(value(loss).shape()));
  for (Node& node : nodes_) node.grad.clear();
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss)[0] = 1.0;

  const auto& k = kernels::active();
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, i);
    if (node.external != nullptr) {
      node.external->ensure_grad();
      k.axpy(node.grad.size(), 1.0, node.grad.data(), node.external->grad().data());
    }
  }
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(t.shape()));
}

}  // namespace

Var matmul(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  if (bv.shape()[0] != k)
    throw ShapeError("matmul: inner dimensions differ, " + shape_to_string(av.shape()) + " * " +
                     shape_to_string(bv.shape()));
  Tensor out(Shape{m, n});
  kernels::active().gemm_nn(m, n, k, av.data().data(), bv.data().data(), out.data().data());

  return tape.record(std::move(out), {a, b}, [m, n, k](Tape& t, std::size_t self) {
    const auto& kern = kernels::active();
    const Var a = t.inputs(self)[0];
    const Var b = t.inputs(self)[1];
    const double* g = t.node_grad(self).data();
    if (auto da = t.grad_buffer(a); !da.empty()) {
      const auto bdata = t.value(b).data();
      std::vector<double> bt(k * n);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = bdata[p * n + j];
      kern.gemm_nt_acc(m, n, k, g, bt.data(), da.data());
    }
    if (auto db = t.grad_buffer(b); !db.empty()) {
      kern.gemm_tn_acc(m, n, k, t.value(a).data().data(), g, db.data());
      if (t.corrupt_backward()) kern.gemm_tn_acc(m, n, k, t.value(a).data().data(), g, db.data());
    }
  });
}

Var add_bias(Tape& tape, Var x, Var bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& bv = tape.value(bias);
  require_matrix(xv, "add_bias");
  const std::size_t m = xv.shape()[0], n = xv.shape()[1];
  if (bv.rank() != 1 || bv.size() != n)
    throw ShapeError("add_bias: bias " + shape_to_string(bv.shape()) + " does not match input " +
                     shape_to_string(xv.shape()));
  Tensor out = xv;
  kernels::active().add_row_broadcast(m, n, bv.data().data(), out.data().data());

  return tape.record(std::move(out), {x, bias}, [m, n](Tape& t, std::size_t self) {
    const auto& kern = kernels::active();
    const double* g = t.node_grad(self).data();
    if (auto dx = t.grad_buffer(t.inputs(self)[0]); !dx.empty()) kern.axpy(m * n, 1.0, g, dx.data());
    if (auto db = t.grad_buffer(t.inputs(self)[1]); !db.empty()) kern.sum_rows_acc(m, n, g, db.data());
  });
}

Var relu(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  Tensor out(xv.shape());
  kernels::active().relu(xv.size(), xv.data().data(), out.data().data());
  return tape.record(std::move(out), {x}, [](Tape& t, std::size_t self) {
    const Var x = t.inputs(self)[0];
    if (auto dx = t.grad_buffer(x); !dx.empty())
      kernels::active().relu_backward_acc(dx.size(), t.value(x).data().data(), t.node_grad(self).data(),
                                          dx.data());
  });
}

Var unary(Tape& tape, Var x, Unary op) {
  const Tensor& xv = tape.value(x);
  Tensor out(xv.shape());
  const auto in = xv.data();
  auto o = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    switch (op) {
      case Unary::Exp:
        o[i] = std::exp(v);
        break;
      case Unary::Log:
        if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v) + " at index " + std::to_string(i));
        o[i] = std::log(v);
        break;
      case Unary::Square:
        o[i] = v * v;
        break;
      case Unary::Reciprocal:
        if (v == 0.0) throw DomainError("reciprocal: zero input at index " + std::to_string(i));
        o[i] = 1.0 / v;
        break;
      case Unary::Sigmoid:
        o[i] = logistic_sigmoid(v);
        break;
    }
  }

  return tape.record(std::move(out), {x}, [op](Tape& t, std::size_t self) {
    const Var x = t.inputs(self)[0];
    auto dx = t.grad_buffer(x);
    if (dx.empty()) return;
    const auto g = t.node_grad(self);
    const auto in = t.value(x).data();
    const auto out = t.value(Var{self}).data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      switch (op) {
        case Unary::Exp:
          dx[i] += g[i] * out[i];
          break;
        case Unary::Log:
          dx[i] += g[i] / in[i];
          break;
        case Unary::Square:
          dx[i] += g[i] * 2.0 * in[i];
          break;
        case Unary::Reciprocal:
          dx[i] -= g[i] * out[i] * out[i];
          break;
        case Unary::Sigmoid:
          dx[i] += g[i] * out[i] * (1.0 - out[i]);
          break;
      }
    }
  });
}

Var clamp(Tape& tape, Var x, double lo, double hi) {
  const Tensor& xv = tape.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::clamp(xv[i], lo, hi);
  return tape.record(std::move(out), {x}, [lo, hi](Tape& t, std::size_t self) {
    const Var x = t.inputs(self)[0];
    auto dx = t.grad_buffer(x);
    if (dx.empty()) return;
    const auto g = t.node_grad(self);
    const auto in = t.value(x).data();
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (in[i] >= lo && in[i] <= hi) dx[i] += g[i];
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape.record(std::move(out), {a, b}, [](Tape& t, std::size_t self) {
    const auto g = t.node_grad(self);
    for (Var in : t.inputs(self))
      if (auto d = t.grad_buffer(in); !d.empty()) kernels::active().axpy(d.size(), 1.0, g.data(), d.data());
  });
}

Var sub(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape.record(std::move(out), {a, b}, [](Tape& t, std::size_t self) {
    const auto g = t.node_grad(self);
    if (auto da = t.grad_buffer(t.inputs(self)[0]); !da.empty())
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i];
    if (auto db = t.grad_buffer(t.inputs(self)[1]); !db.empty())
      for (std::size_t i = 0; i < db.size(); ++i) db[i] -= g[i];
  });
}

Var mul(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape.record(std::move(out), {a, b}, [](Tape& t, std::size_t self) {
    const auto g = t.node_grad(self);
    const Var a = t.inputs(self)[0];
    const Var b = t.inputs(self)[1];
    if (auto da = t.grad_buffer(a); !da.empty()) {
      const auto bv = t.value(b).data();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (auto db = t.grad_buffer(b); !db.empty()) {
      const auto av = t.value(a).data();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Tensor out = tape.value(x);
  for (double& v : out.data()) v *= factor;
  return tape.record(std::move(out), {x}, [factor](Tape& t, std::size_t self) {
    if (auto dx = t.grad_buffer(t.inputs(self)[0]); !dx.empty())
      kernels::active().axpy(dx.size(), factor, t.node_grad(self).data(), dx.data());
  });
}

Var add_scalar(Tape& tape, Var x, double offset) {
  Tensor out = tape.value(x);
  for (double& v : out.data()) v += offset;
  return tape.record(std::move(out), {x}, [](Tape& t, std::size_t self) {
    if (auto dx = t.grad_buffer(t.inputs(self)[0]); !dx.empty())
      kernels::active().axpy(dx.size(), 1.0, t.node_grad(self).data(), dx.data());
  });
}

Var reduce_sum(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.empty()) throw ShapeError("reduce_sum: empty tensor");
  double total = 0.0;
  for (double v : xv.data()) total += v;
  return tape.record(Tensor::scalar(total), {x}, [](Tape& t, std::size_t self) {
    const double g = t.node_grad(self)[0];
    if (auto dx = t.grad_buffer(t.inputs(self)[0]); !dx.empty())
      for (double& d : dx) d += g;
  });
}

Var reduce_mean(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.empty()) throw ShapeError("reduce_mean: empty tensor");
  double total = 0.0;
  for (double v : xv.data()) total += v;
  const double n = static_cast<double>(xv.size());
  return tape.record(Tensor::scalar(total / n), {x}, [n](Tape& t, std::size_t self) {
    const double g = t.node_grad(self)[0] / n;
    if (auto dx = t.grad_buffer(t.inputs(self)[0]); !dx.empty())
      for (double& d : dx) d += g;
  });
}

Var reshape(Tape& tape, Var x, Shape shape) {
  Tensor out = tape.value(x);
  out.reshape(std::move(shape));
  return tape.record(std::move(out), {x}, [](Tape& t, std::size_t self) {
    if (auto dx = t.grad_buffer(t.inputs(self)[0]); !dx.empty())
      kernels::active().axpy(dx.size(), 1.0, t.node_grad(self).data(), dx.data());
  });
}

Var softmax_cross_entropy(Tape& tape, Var logits, std::span<const std::size_t> labels) {
  const Tensor& lv = tape.value(logits);
  require_matrix(lv, "softmax_cross_entropy");
  const std::size_t m = lv.shape()[0], classes = lv.shape()[1];
  if (labels.size() != m)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(m) + " rows");
  Tensor probs(Shape{m, classes});
  Tensor out(Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] >= classes) throw DomainError("softmax_cross_entropy: label out of range at row " + std::to_string(i));
    double peak = lv.at(i, 0);
    for (std::size_t c = 1; c < classes; ++c) peak = std::max(peak, lv.at(i, c));
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs.at(i, c) = std::exp(lv.at(i, c) - peak);
      denom += probs.at(i, c);
    }
    for (std::size_t c = 0; c < classes; ++c) probs.at(i, c) /= denom;
    out[i] = std::log(denom) + peak - lv.at(i, labels[i]);
  }
  std::vector<std::size_t> targets(labels.begin(), labels.end());
  return tape.record(std::move(out), {logits},
                     [probs = std::move(probs), targets = std::move(targets), classes](Tape& t, std::size_t self) {
                       auto dl = t.grad_buffer(t.inputs(self)[0]);
                       if (dl.empty()) return;
                       const auto g = t.node_grad(self);
                       for (std::size_t i = 0; i < targets.size(); ++i)
                         for (std::size_t c = 0; c < classes; ++c) {
                           const double onehot = c == targets[i] ? 1.0 : 0.0;
                           dl[i * classes + c] += g[i] * (probs.at(i, c) - onehot);
                         }
                     });
}

}  // namespace dae
