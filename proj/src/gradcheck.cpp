#include "ranl/gradcheck.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "ranl/errors.hpp"

namespace ranl {
namespace {

double evaluate(const ParamObjective& objective) {
  Tape tape;
  Var out = objective(tape);
  if (out.size() != 1) throw ContractError("grad_check: objective is not scalar, got " + out.shape().str());
  return out[0];
}

}  // namespace

GradCheckReport grad_check_params(const ParamObjective& objective, std::span<Tensor* const> params, double eps,
                                  double tol) {
  GradCheckReport report;
  report.tol = tol;

  const double first = evaluate(objective);
  const double second = evaluate(objective);
  if (std::bit_cast<std::uint64_t>(first) != std::bit_cast<std::uint64_t>(second)) {
    throw ContractError("grad_check: objective is not deterministic");
  }

  for (Tensor* p : params) {
    p->enable_grad();
    p->zero_grad();
  }
  {
    Tape tape;
    Var out = objective(tape);
    tape.backward(out);
  }

  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double plus = evaluate(objective);
      p[i] = saved - eps;
      const double minus = evaluate(objective);
      p[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double analytic = p.grad()[i];
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
      const double rel_err = abs_err / denom;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel_err > report.max_rel_error || report.checked == 0) {
        report.max_rel_error = std::max(report.max_rel_error, rel_err);
        report.worst_tensor = t;
        report.worst_entry = i;
      }
      ++report.checked;
    }
  }
  report.passed = std::isfinite(report.max_rel_error) && report.max_rel_error <= tol;
  return report;
}

GradCheckReport grad_check(const TensorFunction& f, const Tensor& x0, double eps, double tol) {
  Tensor x = x0;
  Tensor* params[] = {&x};
  return grad_check_params([&](Tape& tape) { return f(tape, tape.param(x)); }, params, eps, tol);
}

}  // namespace ranl
