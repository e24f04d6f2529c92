#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "ranl/tensor.hpp"

namespace ranl {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double operator[](std::size_t i) const { return value()[i]; }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recording of executed operations. Each forward pass owns its
// own tape; parameters are borrowed by reference and receive their gradient
// contributions when backward() finishes.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives gradients.
  Var constant(Tensor value);
  // Leaf that borrows a frozen tensor without copying it.
  Var constant_ref(const Tensor& value);
  // Differentiable leaf owned by the tape; read its gradient with grad().
  Var input(Tensor value);
  // Differentiable leaf borrowing `param`. After backward() the gradient is
  // added into param.grad() (enabled on demand).
  Var param(Tensor& param);

  // Records an operation result. `inputs` are used only to decide whether the
  // result participates in differentiation.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Gradient buffer of a node; empty before backward() or for constants.
  std::span<double> grad(std::size_t id);
  std::span<const double> grad(Var v) const;

  // Seeds d(root)/d(root) = 1 and replays the tape in reverse. The root must
  // be a single-element tensor. May be called at most once per tape.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Tensor* param = nullptr;
    std::vector<double> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace ranl
