#include "psjnet/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psjnet/error.hpp"
#include "psjnet/numkernel/random.hpp"

namespace psjnet {

void SplitFractions::validate() const {
  if (!(train >= 0.0 && valid >= 0.0 && test >= 0.0)) {
    throw SplitError("split fractions must be non-negative");
  }
  if (std::fabs(train + valid + test - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");
}

SplitSizes split_sizes(std::size_t n, const SplitFractions& f) {
  f.validate();
  const double fr[3] = {f.train, f.valid, f.test};
  std::size_t parts = 0;
  for (double x : fr) parts += x > 0.0 ? 1 : 0;
  if (n < parts) {
    throw SplitError("cannot split " + std::to_string(n) + " sequences into " +
                     std::to_string(parts) + " non-empty parts");
  }
  std::size_t size[3];
  const auto nd = static_cast<double>(n);
  size[1] = static_cast<std::size_t>(std::llround(nd * f.valid));
  size[2] = static_cast<std::size_t>(std::llround(nd * f.test));
  size[1] = std::min(size[1], n);
  size[2] = std::min(size[2], n - size[1]);
  size[0] = n - size[1] - size[2];
  // Give every positive part at least one item, taking from the largest.
  for (int i = 0; i < 3; ++i) {
    if (fr[i] > 0.0 && size[i] == 0) {
      const auto big = std::max_element(size, size + 3) - size;
      --size[big];
      ++size[i];
    }
  }
  return {size[0], size[1], size[2]};
}

SplitIndices split_indices(std::size_t n, const SplitFractions& f, std::uint64_t seed) {
  const SplitSizes s = split_sizes(n, f);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  nk::Rng rng(seed);
  rng.shuffle(order);
  SplitIndices out;
  const auto b = order.begin();
  out.train.assign(b, b + static_cast<std::ptrdiff_t>(s.train));
  out.valid.assign(b + static_cast<std::ptrdiff_t>(s.train),
                   b + static_cast<std::ptrdiff_t>(s.train + s.valid));
  out.test.assign(b + static_cast<std::ptrdiff_t>(s.train + s.valid), order.end());
  for (auto* part : {&out.train, &out.valid, &out.test}) std::sort(part->begin(), part->end());
  return out;
}

DatasetSplits split_dataset(std::span<const MixedSequence> seqs, const SplitFractions& f,
                            std::uint64_t seed) {
  const SplitIndices idx = split_indices(seqs.size(), f, seed);
  DatasetSplits out;
  for (std::size_t i : idx.train) out.train.push_back(seqs[i]);
  for (std::size_t i : idx.valid) out.valid.push_back(seqs[i]);
  for (std::size_t i : idx.test) out.test.push_back(seqs[i]);
  return out;
}

}  // namespace psjnet
