#ifndef PSJNET_NUMKERNEL_GRAD_CHECK_HPP_
#define PSJNET_NUMKERNEL_GRAD_CHECK_HPP_

#include <cstddef>
#include <functional>
#include <string>

#include "psjnet/numkernel/tape.hpp"

namespace psjnet::nk {

// Builds a scalar loss on `tape`, reading parameters through tape.param().
// Must be deterministic.
using LossBuilder = std::function<Var(Tape& tape)>;

struct CheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

// Compares reverse-mode gradients against central differences for every
// scalar of every parameter in `params`. The relative error of one scalar is
// |analytic - numeric| / max(1, |analytic|, |numeric|). `params` is perturbed
// in place and restored before returning.
CheckReport grad_check(const LossBuilder& f, ParamStore& params, double eps,
                       double tol);

}  // namespace psjnet::nk

#endif  // PSJNET_NUMKERNEL_GRAD_CHECK_HPP_
