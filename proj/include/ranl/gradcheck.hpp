#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "ranl/tape.hpp"

namespace ranl {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  // Location of the worst coordinate: tensor index and entry within it.
  std::size_t worst_tensor = 0;
  std::size_t worst_entry = 0;
  double tol = 0.0;
  bool passed = false;
};

// Denominator floor for relative errors, so coordinates whose true gradient
// is ~0 are judged on absolute error scaled by this value. Central differences
// at eps 1e-5 on an O(1) loss carry ~1e-10 of roundoff, which this keeps
// below 1e-5 relative.
inline constexpr double kGradCheckFloor = 1e-5;

// Builds a scalar on a fresh tape each time it is called, binding `params`
// with Tape::param().
using ParamObjective = std::function<Var(Tape&)>;

// Compares analytic gradients of `objective` w.r.t. every entry of `params`
// against central differences (f(x+eps e_i) - f(x-eps e_i)) / 2 eps.
// Perturbs params in place and restores them. Existing gradient slots are
// zeroed. Throws ContractError if two forward passes disagree.
GradCheckReport grad_check_params(const ParamObjective& objective, std::span<Tensor* const> params, double eps,
                                  double tol);

using TensorFunction = std::function<Var(Tape&, Var)>;

// Single-tensor form: f maps a differentiable input x to a scalar.
GradCheckReport grad_check(const TensorFunction& f, const Tensor& x0, double eps, double tol);

}  // namespace ranl
