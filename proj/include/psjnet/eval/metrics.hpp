#ifndef PSJNET_EVAL_METRICS_HPP_
#define PSJNET_EVAL_METRICS_HPP_

#include <cstddef>
#include <span>

namespace psjnet {

// 1-based rank of `truth` under descending scores; ties go to the lower
// index. Throws IndexError if truth is out of range and NumericsError if a
// score is not finite.
std::size_t rank_of(std::span<const double> scores, std::size_t truth);

// Per-case metrics from a rank. k must be at least 1.
double hit_at_k(std::size_t rank, std::size_t k);
double reciprocal_rank_at_k(std::size_t rank, std::size_t k);

double recall_at_k(std::span<const double> scores, std::size_t truth, std::size_t k);
double mrr_at_k(std::span<const double> scores, std::size_t truth, std::size_t k);

}  // namespace psjnet

#endif  // PSJNET_EVAL_METRICS_HPP_
