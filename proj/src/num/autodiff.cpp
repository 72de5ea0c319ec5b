// SPDX-License-Identifier: Apache-2.0
#include "slotgen/num/autodiff.hpp"

#include "slotgen/errors.hpp"

namespace slotgen::num {

namespace {
thread_local Graph* g_active = nullptr;
}

void Node::ensure_grad() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
}

void Node::zero_grad() {
  if (!grad.empty()) grad.fill(0.0);
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

double Var::item() const {
  if (node_->value.size() != 1)
    throw DimensionError("item() needs a single-element tensor, got " + shape_string(node_->value.shape()));
  return node_->value[0];
}

Graph::Graph() : previous_(g_active) { g_active = this; }

Graph::~Graph() { g_active = previous_; }

Graph* Graph::active() noexcept { return g_active; }

void Graph::record(NodePtr node) { tape_.push_back(std::move(node)); }

void Graph::backward(const Var& loss) {
  if (backward_done_) throw ContractError("backward called twice on the same graph");
  if (!loss) throw ContractError("backward on an empty variable");
  if (loss.value().size() != 1)
    throw ContractError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  backward_done_ = true;
  if (!loss.requires_grad()) return;
  Node& root = loss.node();
  root.ensure_grad();
  root.grad[0] += 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.backward) continue;
    n.backward(n);
  }
}

bool tracking(std::initializer_list<const Var*> inputs) {
  if (!g_active) return false;
  for (const Var* v : inputs)
    if (v->requires_grad()) return true;
  return false;
}

Var record(Tensor value, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->backward = std::move(backward);
  g_active->record(node);
  return Var(std::move(node));
}

}  // namespace slotgen::num
