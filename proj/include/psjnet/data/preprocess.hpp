#ifndef PSJNET_DATA_PREPROCESS_HPP_
#define PSJNET_DATA_PREPROCESS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "psjnet/data/raw_log.hpp"
#include "psjnet/model/sequence.hpp"

namespace psjnet {

// Watch-log rules. Each raw user id is one (naturally shared) account.
struct PreprocessConfig {
  std::size_t min_records = 10;             // users with fewer are dropped
  std::int64_t min_watch_seconds = 300;     // users with less are dropped
  std::int64_t merge_window_seconds = 600;  // same-item replays closer than this merge
  std::size_t chunk = 30;                   // events per sequence; tails dropped
  std::size_t min_per_domain = 5;           // keep chunks with more than this per domain
};

struct PreprocessResult {
  std::vector<MixedSequence> sequences;
  std::size_t accounts = 0;  // users surviving the activity filter
};

// Throws FormatError when any event lacks a duration.
PreprocessResult preprocess_logs(std::span<const RawEvent> events,
                                 const PreprocessConfig& config = {});

}  // namespace psjnet

#endif  // PSJNET_DATA_PREPROCESS_HPP_
