// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "slotgen/num/tensor.hpp"

namespace slotgen::num {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in a differentiation graph.
///
/// `grad` is allocated only for nodes with `requires_grad` set. Interior nodes
/// carry a `backward` closure that reads `grad` and accumulates into the
/// gradients of the nodes it was computed from.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::function<void(Node&)> backward;

  void ensure_grad();
  void zero_grad();
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  double item() const;

  void zero_grad() { node_->zero_grad(); }
  Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }
  explicit operator bool() const noexcept { return static_cast<bool>(node_); }

 private:
  NodePtr node_;
};

/// Records the operations of one forward pass on the current thread.
///
/// Constructing a Graph makes it the thread's active tape until it is
/// destroyed. Operations whose inputs require gradients are recorded only
/// while a tape is active; without one every result is a plain constant,
/// which is the inference mode. Graphs nest: the previous tape is restored on
/// destruction.
class Graph {
 public:
  Graph();
  ~Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Propagates d(loss)/d(node) to every reachable node that requires a
  /// gradient. Leaf gradients accumulate; call zero_grad on parameters
  /// between optimizer steps.
  void backward(const Var& loss);

  std::size_t size() const noexcept { return tape_.size(); }

  static Graph* active() noexcept;
  void record(NodePtr node);

 private:
  std::vector<NodePtr> tape_;
  Graph* previous_ = nullptr;
  bool backward_done_ = false;
};

/// True when a tape is active and at least one input requires a gradient.
bool tracking(std::initializer_list<const Var*> inputs);

/// Wraps `value` in a gradient-carrying node with the given local backward
/// rule and records it on the active tape. Only call when `tracking` holds.
Var record(Tensor value, std::function<void(Node&)> backward);

}  // namespace slotgen::num
