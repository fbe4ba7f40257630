#include "psjnet/eval/significance.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "psjnet/error.hpp"

namespace psjnet {

TTestResult paired_t_test(std::span<const double> x, std::span<const double> y, double alpha) {
  if (x.size() != y.size()) {
    throw ShapeError("paired_t_test: samples of length " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  }
  const std::size_t n = x.size();
  if (n < 2) throw DegenerateTestError("paired_t_test needs at least two pairs");
  std::vector<double> d(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = x[i] - y[i];
    mean += d[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(n - 1);
  if (!(var > 0.0)) throw DegenerateTestError("paired_t_test: differences have zero variance");

  TTestResult r;
  r.df = n - 1;
  r.mean_difference = mean;
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  const boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  r.significant = r.p < alpha;
  return r;
}

}  // namespace psjnet
