#ifndef PSJNET_DATA_STATS_HPP_
#define PSJNET_DATA_STATS_HPP_

#include <cstddef>
#include <span>
#include <string>

#include "psjnet/model/sequence.hpp"

namespace psjnet {

// The dataset-statistics table: items and logs per domain, contributing
// users, and sequences per split.
struct DatasetStats {
  std::size_t items[2] = {0, 0};
  std::size_t logs[2] = {0, 0};
  std::size_t users = 0;
  std::size_t sequences = 0;
  std::size_t train = 0, valid = 0, test = 0;
};

DatasetStats compute_stats(std::span<const MixedSequence> train,
                           std::span<const MixedSequence> valid,
                           std::span<const MixedSequence> test, std::size_t users);

std::string format_stats(const DatasetStats& s);

}  // namespace psjnet

#endif  // PSJNET_DATA_STATS_HPP_
