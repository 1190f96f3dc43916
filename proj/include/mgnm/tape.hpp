#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mgnm/tensor.hpp"

namespace mgnm {

class Tape;

// Lightweight handle into a Tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

// Tensor-granular reverse-mode tape. Ops append nodes with a backward
// closure; backward() walks the nodes in reverse and accumulates gradients.
// With grad_enabled=false (inference) no closures are stored.
class Tape {
 public:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    std::function<void(Tape&)> backward;
    bool requires_grad = false;
  };

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool e) { grad_enabled_ = e; }

  bool check_finite = true;

  Var constant(Tensor value) { return push(std::move(value), false, nullptr); }

  Var leaf(Tensor value) { return push(std::move(value), grad_enabled_, nullptr); }

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> backward) {
    if (check_finite) require_finite(value, "tape op output");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && grad_enabled_;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  void set_backward(Var v, std::function<void(Tape&)> backward) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.requires_grad) n.backward = std::move(backward);
  }

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  Tensor& value_mut(Var v) { return nodes_[static_cast<std::size_t>(v.id)].value; }
  bool requires_grad(Var v) const {
    return nodes_[static_cast<std::size_t>(v.id)].requires_grad;
  }

  // Gradient of the last backward() root with respect to v. Zero tensor if v
  // never received a contribution.
  const Tensor& grad(Var v) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  Tensor& grad_mut(Var v) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  void accumulate(Var v, const Tensor& g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (!n.requires_grad) return;
    Tensor& dst = grad_mut(v);
    const double* src = g.data();
    double* d = dst.data();
    for (std::int64_t i = 0; i < g.size(); ++i) d[i] += src[i];
  }

  // root must be a scalar (size-1) node.
  void backward(Var root) {
    if (!grad_enabled_) throw std::logic_error("backward on a no-grad tape");
    if (value(root).size() != 1) throw std::invalid_argument("backward root must be scalar");
    for (Node& n : nodes_) {
      if (n.grad.size() != 0) n.grad.fill(0.0);
    }
    grad_mut(root)[0] = 1.0;
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.requires_grad && n.backward && n.grad.size() != 0) n.backward(*this);
    }
  }

  void clear() { nodes_.clear(); }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Drops all nodes past `mark`; lets one tape be reused across per-user
  // forward passes while parameter leaves (pushed first) stay alive.
  void truncate(std::size_t mark) { nodes_.resize(mark); }

 private:
  bool grad_enabled_;
  std::vector<Node> nodes_;
};

}  // namespace mgnm
