#ifndef PSJNET_TRAINER_OPTIMIZER_HPP_
#define PSJNET_TRAINER_OPTIMIZER_HPP_

#include <cstdint>

#include "psjnet/numkernel/tensor.hpp"

namespace psjnet {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments mirror the parameter store; t counts steps taken.
struct AdamState {
  nk::GradMap m;
  nk::GradMap v;
  std::uint64_t t = 0;
};

// Element-wise min(hi, max(lo, g)). Throws ConfigError unless lo < hi.
void clip_gradients(nk::GradMap& grads, double lo = -5.0, double hi = 5.0);

// One bias-corrected Adam update of every parameter that has a gradient.
// Throws NumericsError naming the first parameter with a non-finite gradient,
// before anything is modified.
void adam_step(nk::ParamStore& params, const nk::GradMap& grads, AdamState& state,
               const AdamConfig& config);

// Inverted dropout on a plain tensor; identity when not training.
nk::Tensor apply_dropout(const nk::Tensor& h, double keep_prob, bool training,
                         std::uint64_t seed);

}  // namespace psjnet

#endif  // PSJNET_TRAINER_OPTIMIZER_HPP_
