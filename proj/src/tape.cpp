#include "ranl/tape.hpp"

#include "ranl/errors.hpp"

namespace ranl {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant_ref(const Tensor& value) {
  Node node;
  node.borrowed = &value;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Tensor value) {
  Node node;
  node.owned = std::move(value);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Tensor& param) {
  Node node;
  node.borrowed = &param;
  node.param = &param;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.owned = std::move(value);
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("operand recorded on a different tape");
    if (nodes_[in.id()].requires_grad) node.requires_grad = true;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& node = nodes_[id];
  return node.borrowed != nullptr ? *node.borrowed : node.owned;
}

std::span<double> Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.requires_grad && node.grad.empty()) node.grad.assign(value(id).size(), 0.0);
  return node.grad;
}

std::span<const double> Tape::grad(Var v) const { return nodes_[v.id()].grad; }

void Tape::backward(Var root) {
  if (backward_done_) throw ContractError("backward called twice on the same tape");
  if (root.size() != 1) {
    throw ContractError("backward root must be scalar, got " + root.shape().str());
  }
  backward_done_ = true;
  if (!requires_grad(root.id())) return;
  grad(root.id())[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, i);
  }
  for (Node& node : nodes_) {
    if (node.param == nullptr || node.grad.empty()) continue;
    node.param->enable_grad();
    auto dst = node.param->grad();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += node.grad[k];
  }
}

}  // namespace ranl
