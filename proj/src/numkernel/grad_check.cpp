#include "psjnet/numkernel/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "psjnet/error.hpp"

namespace psjnet::nk {

namespace {

double evaluate(const LossBuilder& f, const ParamStore& params) {
  Tape tape(&params);
  const double v = tape.value(f(tape)).item();
  if (!std::isfinite(v)) throw NumericsError("grad_check: loss is not finite");
  return v;
}

}  // namespace

CheckReport grad_check(const LossBuilder& f, ParamStore& params, double eps,
                       double tol) {
  if (!(eps > 0.0)) throw NumericsError("grad_check: eps must be positive");

  GradMap analytic;
  {
    Tape tape(&params);
    Var loss = f(tape);
    if (!std::isfinite(tape.value(loss).item())) {
      throw NumericsError("grad_check: loss is not finite");
    }
    analytic = tape.backward(loss);
  }

  CheckReport report;
  for (auto& [name, tensor] : params) {
    const Tensor& g = analytic.at(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + eps;
      const double up = evaluate(f, params);
      tensor[i] = saved - eps;
      const double down = evaluate(f, params);
      tensor[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = g[i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double err = std::abs(a - numeric) / denom;
      ++report.checked;
      if (report.worst_param.empty() || err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_err < tol;
  return report;
}

}  // namespace psjnet::nk
