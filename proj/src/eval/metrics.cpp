#include "psjnet/eval/metrics.hpp"

#include <cmath>
#include <string>

#include "psjnet/error.hpp"

namespace psjnet {

std::size_t rank_of(std::span<const double> scores, std::size_t truth) {
  if (truth >= scores.size()) {
    throw IndexError("ground truth index " + std::to_string(truth) +
                     " outside score vector of length " + std::to_string(scores.size()));
  }
  const double st = scores[truth];
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double s = scores[j];
    if (!std::isfinite(s)) throw NumericsError("non-finite score at index " + std::to_string(j));
    if (s > st || (s == st && j < truth)) ++ahead;
  }
  return ahead + 1;
}

namespace {
void check_k(std::size_t k) {
  if (k == 0) throw ConfigError("cutoff k must be at least 1");
}
}  // namespace

double hit_at_k(std::size_t rank, std::size_t k) {
  check_k(k);
  return rank <= k ? 1.0 : 0.0;
}

double reciprocal_rank_at_k(std::size_t rank, std::size_t k) {
  check_k(k);
  return rank <= k ? 1.0 / static_cast<double>(rank) : 0.0;
}

double recall_at_k(std::span<const double> scores, std::size_t truth, std::size_t k) {
  check_k(k);
  return hit_at_k(rank_of(scores, truth), k);
}

double mrr_at_k(std::span<const double> scores, std::size_t truth, std::size_t k) {
  check_k(k);
  return reciprocal_rank_at_k(rank_of(scores, truth), k);
}

}  // namespace psjnet
