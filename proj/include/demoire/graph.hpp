#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "demoire/tensor.hpp"

namespace demoire {

// Reverse-mode tape over rank-4 tensors. Each op builds a node holding the
// forward value and a closure that scatters the node's gradient into its
// parents. Graphs are rebuilt per forward pass; parameters are long-lived
// leaf nodes shared across passes.

template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<Scalar>>> parents;
  std::function<void(Node<Scalar>&)> backward_fn;

  Tensor<Scalar>& ensure_grad() {
    if (grad.size() != value.size()) {
      grad = Tensor<Scalar>::zeros(value.shape());
    }
    return grad;
  }

  bool has_grad() const { return grad.size() == value.size() && grad.size() > 0; }
};

template <typename Scalar>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<Scalar>> node) : node_(std::move(node)) {}

  /// Leaf holding a value; set requires_grad for trainable parameters or for
  /// inputs whose gradient is wanted.
  static Var leaf(Tensor<Scalar> value, bool requires_grad) {
    auto n = std::make_shared<Node<Scalar>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  static Var constant(Tensor<Scalar> value) { return leaf(std::move(value), false); }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<Scalar>& value() const { return node_->value; }
  Tensor<Scalar>& value() { return node_->value; }
  const Shape4& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  const Tensor<Scalar>& grad() const {
    if (!node_->has_grad()) {
      throw std::logic_error("gradient not populated; call backward() first");
    }
    return node_->grad;
  }

  void zero_grad() {
    if (node_ && node_->has_grad()) node_->grad.set_zero();
  }

  /// Backpropagate from a scalar (1x1x1x1) root.
  void backward() const {
    if (!node_) throw std::logic_error("backward() on undefined Var");
    if (node_->value.size() != 1) {
      throw std::logic_error("backward() requires a scalar root, got " +
                             node_->value.shape().str());
    }
    if (!node_->requires_grad) return;
    std::vector<Node<Scalar>*> order = topo_order(node_.get());
    node_->ensure_grad().array()[0] = Scalar(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<Scalar>* n = *it;
      if (n->backward_fn && n->has_grad()) n->backward_fn(*n);
    }
  }

  std::shared_ptr<Node<Scalar>> node_;

 private:
  // Iterative post-order over grad-requiring ancestors.
  static std::vector<Node<Scalar>*> topo_order(Node<Scalar>* root) {
    std::vector<Node<Scalar>*> order;
    std::unordered_set<Node<Scalar>*> visited;
    std::vector<std::pair<Node<Scalar>*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Node<Scalar>* p = node->parents[next++].get();
        if (p->requires_grad && !visited.count(p)) {
          visited.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
    return order;
  }
};

/// Assemble an op node. `bw` receives the finished node and must add into
/// each grad-requiring parent's grad (via ensure_grad). It may capture parent
/// node pointers; the parents vector keeps them alive.
template <typename Scalar, typename Backward>
Var<Scalar> make_op(Tensor<Scalar> value, std::vector<Var<Scalar>> parents, Backward&& bw) {
  auto n = std::make_shared<Node<Scalar>>();
  n->value = std::move(value);
  n->parents.reserve(parents.size());
  for (auto& p : parents) {
    n->requires_grad = n->requires_grad || p.node_->requires_grad;
    n->parents.push_back(std::move(p.node_));
  }
  if (n->requires_grad) n->backward_fn = std::forward<Backward>(bw);
  return Var<Scalar>(std::move(n));
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<Scalar> out(a.shape());
  out.array() = a.value().array() + b.value().array();
  Node<Scalar>* an = a.node_.get();
  Node<Scalar>* bn = b.node_.get();
  return make_op<Scalar>(std::move(out), {a, b}, [an, bn](Node<Scalar>& self) {
    if (an->requires_grad) an->ensure_grad().array() += self.grad.array();
    if (bn->requires_grad) bn->ensure_grad().array() += self.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<Scalar> out(a.shape());
  out.array() = a.value().array() - b.value().array();
  Node<Scalar>* an = a.node_.get();
  Node<Scalar>* bn = b.node_.get();
  return make_op<Scalar>(std::move(out), {a, b}, [an, bn](Node<Scalar>& self) {
    if (an->requires_grad) an->ensure_grad().array() += self.grad.array();
    if (bn->requires_grad) bn->ensure_grad().array() -= self.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<Scalar> out(a.shape());
  out.array() = a.value().array() * b.value().array();
  Node<Scalar>* an = a.node_.get();
  Node<Scalar>* bn = b.node_.get();
  return make_op<Scalar>(std::move(out), {a, b}, [an, bn](Node<Scalar>& self) {
    if (an->requires_grad) an->ensure_grad().array() += self.grad.array() * bn->value.array();
    if (bn->requires_grad) bn->ensure_grad().array() += self.grad.array() * an->value.array();
  });
}

template <typename Scalar>
Var<Scalar> div(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "div");
  Tensor<Scalar> out(a.shape());
  out.array() = a.value().array() / b.value().array();
  Node<Scalar>* an = a.node_.get();
  Node<Scalar>* bn = b.node_.get();
  return make_op<Scalar>(std::move(out), {a, b}, [an, bn](Node<Scalar>& self) {
    if (an->requires_grad) an->ensure_grad().array() += self.grad.array() / bn->value.array();
    if (bn->requires_grad) {
      bn->ensure_grad().array() -= self.grad.array() * an->value.array() /
                                   (bn->value.array() * bn->value.array());
    }
  });
}

/// a*x + b with scalar coefficients.
template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& x, Scalar a, Scalar b) {
  Tensor<Scalar> out(x.shape());
  out.array() = a * x.value().array() + b;
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, a](Node<Scalar>& self) {
    xn->ensure_grad().array() += a * self.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape());
  out.array() = x.value().array().max(Scalar(0));
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn](Node<Scalar>& self) {
    // subgradient 0 at the kink
    xn->ensure_grad().array() +=
        self.grad.array() * (xn->value.array() > Scalar(0)).template cast<Scalar>();
  });
}

namespace detail {
template <typename Scalar>
Scalar stable_sigmoid(Scalar v) {
  if (v >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-v));
  }
  Scalar e = std::exp(v);
  return e / (Scalar(1) + e);
}
}  // namespace detail

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape());
  out.array() = x.value().array().unaryExpr([](Scalar v) { return detail::stable_sigmoid(v); });
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn](Node<Scalar>& self) {
    xn->ensure_grad().array() +=
        self.grad.array() * self.value.array() * (Scalar(1) - self.value.array());
  });
}

// ---------------------------------------------------------------------------
// Reductions (result is a 1x1x1x1 scalar tensor)
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> sum_all(const Var<Scalar>& x) {
  Tensor<Scalar> out(1, 1, 1, 1);
  out.array()[0] = x.value().array().sum();
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn](Node<Scalar>& self) {
    xn->ensure_grad().array() += self.grad.array()[0];
  });
}

template <typename Scalar>
Var<Scalar> mean_all(const Var<Scalar>& x) {
  Tensor<Scalar> out(1, 1, 1, 1);
  out.array()[0] = x.value().array().sum() / Scalar(x.value().size());
  Node<Scalar>* xn = x.node_.get();
  const Scalar inv = Scalar(1) / Scalar(x.value().size());
  return make_op<Scalar>(std::move(out), {x}, [xn, inv](Node<Scalar>& self) {
    xn->ensure_grad().array() += self.grad.array()[0] * inv;
  });
}

/// Value of a scalar Var.
template <typename Scalar>
Scalar scalar_value(const Var<Scalar>& v) {
  if (v.value().size() != 1) {
    throw std::logic_error("scalar_value on non-scalar Var " + v.shape().str());
  }
  return v.value().array()[0];
}

}  // namespace demoire
