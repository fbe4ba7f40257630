#ifndef PSJNET_DATA_SYNTHETIC_HPP_
#define PSJNET_DATA_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "psjnet/data/split.hpp"
#include "psjnet/model/sequence.hpp"

namespace psjnet {

// Planted-role benchmark. Each role type owns a disjoint cycle of A items
// and walks it in order. An account holds 2-4 role types; each turn one of
// them (uniformly) emits its next A item and, with probability b_rate, a B
// item right after it: link(that A item) with probability `signal`, else a
// uniform B item.
struct SynthConfig {
  std::size_t accounts = 64;
  std::size_t sequences_per_account = 8;
  std::size_t role_types = 8;
  std::size_t role_items = 5;  // A items per role type
  std::size_t min_roles = 2;
  std::size_t max_roles = 4;
  double signal = 1.0;
  double b_rate = 0.5;
  std::size_t min_length = 12;
  std::size_t max_length = 30;
  SplitFractions fractions;
  std::uint64_t seed = 7;

  // Throws ConfigError.
  void validate() const;
};

// Item ids: A items are 1..role_types*role_items; link(a) = a + kSynthLinkOffset.
inline constexpr ItemId kSynthLinkOffset = 1000;
inline ItemId synth_a_item(std::size_t role, std::size_t j, std::size_t role_items) {
  return static_cast<ItemId>(role * role_items + j + 1);
}
inline ItemId synth_link(ItemId a) { return a + kSynthLinkOffset; }

struct SynthDataset {
  std::vector<MixedSequence> all;  // account order
  std::vector<std::size_t> account_of;
  std::vector<std::vector<std::size_t>> roles_of;  // per account
  DatasetSplits splits;
};

SynthDataset make_synthetic_benchmark(const SynthConfig& config);

}  // namespace psjnet

#endif  // PSJNET_DATA_SYNTHETIC_HPP_
