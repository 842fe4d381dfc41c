#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bbnet/error.hpp"

namespace bbnet::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

enum class Mode { Train, Eval };

/// Tensor storage. Every buffer starts on Eigen's maximal alignment, so the vectorized
/// kernels see the same alignment pattern (and round the same way) on every run.
template <typename Scalar>
using Storage = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

namespace detail {

/// Storage and autodiff record behind a Tensor handle.
template <typename Scalar>
struct Node {
  Shape shape;
  Storage<Scalar> value;
  Storage<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), Scalar{0});
  }
};

}  // namespace detail

/// Dense row-major n-d array with optional reverse-mode gradient tracking.
///
/// Copies share storage (handle semantics, like a shared_ptr). Operations that
/// receive at least one input with requires_grad() record a backward closure on
/// the result; backward() walks those records in reverse topological order.
template <typename Scalar>
class Tensor {
 public:
  using value_type = Scalar;
  using NodeT = detail::Node<Scalar>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), Scalar{0}, requires_grad);
  }

  static Tensor filled(Shape shape, Scalar v, bool requires_grad = false) {
    const std::size_t n = numel(shape);
    return from_buffer(std::move(shape), Storage<Scalar>(n, v), requires_grad);
  }

  static Tensor from_values(Shape shape, const std::vector<Scalar>& values, bool requires_grad = false) {
    return from_buffer(std::move(shape), Storage<Scalar>(values.begin(), values.end()), requires_grad);
  }

  static Tensor from_buffer(Shape shape, Storage<Scalar> values, bool requires_grad = false) {
    if (shape.empty()) throw ShapeError("tensor rank must be >= 1");
    for (std::size_t d : shape) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
    }
    if (values.size() != numel(shape)) {
      throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                       shape_string(shape));
    }
    auto node = std::make_shared<NodeT>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  /// Internal: result of an op. `parents` are kept only when some parent needs a gradient.
  static Tensor make_result(Shape shape, Storage<Scalar> values, std::vector<Tensor> parents,
                            std::function<void(NodeT&)> backward_fn) {
    Tensor out = from_buffer(std::move(shape), std::move(values), false);
    const bool track = std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
    if (track) {
      out.node_->requires_grad = true;
      for (auto& p : parents) out.node_->parents.push_back(p.node_);
      out.node_->backward = std::move(backward_fn);
    }
    return out;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }

  std::span<Scalar> values() { return node_->value; }
  std::span<const Scalar> values() const { return node_->value; }
  Scalar operator[](std::size_t i) const { return node_->value[i]; }

  Scalar item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const Scalar> grad() const { return node_->grad; }
  std::span<Scalar> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() {
    if (has_grad()) std::fill(node_->grad.begin(), node_->grad.end(), Scalar{0});
  }

  /// Deep copy of the values with no history.
  Tensor detach() const { return from_buffer(shape(), node_->value, false); }

  NodeT& node() const { return *node_; }

 private:
  explicit Tensor(std::shared_ptr<NodeT> node) : node_(std::move(node)) {}

  std::shared_ptr<NodeT> node_;

  template <typename S>
  friend void backward(const Tensor<S>& loss);
  template <typename S>
  friend std::shared_ptr<detail::Node<S>> node_ptr(const Tensor<S>& t);
};

template <typename Scalar>
std::shared_ptr<detail::Node<Scalar>> node_ptr(const Tensor<Scalar>& t) {
  return t.node_;
}

/// Reverse-mode pass from a scalar. Gradients accumulate into every tensor that
/// requires them; the recorded graph is released afterwards.
template <typename Scalar>
void backward(const Tensor<Scalar>& loss) {
  using NodeT = detail::Node<Scalar>;
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) throw UsageError("loss does not depend on any tensor that requires grad");

  // Iterative post-order DFS gives a topological order.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{loss.node_.get(), 0}};
  visited.insert(loss.node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeT* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node_->ensure_grad();
  loss.node_->grad[0] += Scalar{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* node = *it;
    if (node->backward) {
      for (auto& p : node->parents) {
        if (p->requires_grad) p->ensure_grad();
      }
      node->backward(*node);
    }
  }
  for (NodeT* node : order) {
    if (node->backward) {
      node->backward = nullptr;
      node->parents.clear();
    }
  }
}

}  // namespace bbnet::nn
