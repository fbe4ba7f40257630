#ifndef PSJNET_EVAL_REPORT_HPP_
#define PSJNET_EVAL_REPORT_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "psjnet/model/sequence.hpp"

namespace psjnet {

// Ranks of one domain's evaluation cases over the full catalogue.
struct DomainResult {
  std::vector<std::size_t> ranks;
  std::size_t skipped_oov_truth = 0;    // cases whose ground truth is unseen
  std::size_t dropped_context = 0;      // unseen context events removed

  std::size_t cases() const { return ranks.size(); }
  double recall(std::size_t k) const;
  double mrr(std::size_t k) const;
  std::vector<double> hits(std::size_t k) const;
  std::vector<double> reciprocal_ranks(std::size_t k) const;
};

struct EvalReport {
  std::string label;
  std::vector<std::size_t> cutoffs{5, 10, 20};
  DomainResult domain[2];

  const DomainResult& at(Domain d) const { return domain[index_of(d)]; }
  DomainResult& at(Domain d) { return domain[index_of(d)]; }

  // Percentages in the usual results-table layout: per domain, MRR at
  // every cutoff and then Recall at every cutoff.
  static std::string table_header(const std::vector<std::size_t>& cutoffs);
  std::string table_row() const;
  std::string table() const;
  // One `key=value` per line, fractions in [0, 1].
  std::string key_values() const;
};

// Parses "5,10,20". Throws ConfigError for empty, zero or malformed entries.
std::vector<std::size_t> parse_cutoffs(const std::string& text);

}  // namespace psjnet

#endif  // PSJNET_EVAL_REPORT_HPP_
