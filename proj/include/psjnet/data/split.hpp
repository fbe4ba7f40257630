#ifndef PSJNET_DATA_SPLIT_HPP_
#define PSJNET_DATA_SPLIT_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "psjnet/model/sequence.hpp"

namespace psjnet {

struct SplitFractions {
  double train = 0.75;
  double valid = 0.15;
  double test = 0.10;

  // Throws SplitError unless all are >= 0 and they sum to 1 (within 1e-9).
  void validate() const;
};

struct SplitSizes {
  std::size_t train = 0, valid = 0, test = 0;
};

// Rounded sizes within +-1 of n * fraction, except where the one-item
// minimum for each part with a positive fraction forces more. Throws
// SplitError when n is smaller than the number of such parts.
SplitSizes split_sizes(std::size_t n, const SplitFractions& f);

struct SplitIndices {
  std::vector<std::size_t> train, valid, test;  // each ascending
};
SplitIndices split_indices(std::size_t n, const SplitFractions& f, std::uint64_t seed);

struct DatasetSplits {
  std::vector<MixedSequence> train, valid, test;
};
DatasetSplits split_dataset(std::span<const MixedSequence> seqs, const SplitFractions& f,
                            std::uint64_t seed);

}  // namespace psjnet

#endif  // PSJNET_DATA_SPLIT_HPP_
