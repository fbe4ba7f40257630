#ifndef PSJNET_EVAL_SIGNIFICANCE_HPP_
#define PSJNET_EVAL_SIGNIFICANCE_HPP_

#include <cstddef>
#include <span>

namespace psjnet {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t df = 0;
  double mean_difference = 0.0;  // mean of x - y
  bool significant = false;      // p < alpha
};

// Paired t-test on per-case metrics. Throws ShapeError on unequal lengths
// and DegenerateTestError when n < 2 or the differences have zero variance.
TTestResult paired_t_test(std::span<const double> x, std::span<const double> y,
                          double alpha = 0.05);

}  // namespace psjnet

#endif  // PSJNET_EVAL_SIGNIFICANCE_HPP_
