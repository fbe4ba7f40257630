#include "psjnet/data/preprocess.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "psjnet/error.hpp"

namespace psjnet {

PreprocessResult preprocess_logs(std::span<const RawEvent> events, const PreprocessConfig& config) {
  if (config.chunk == 0) throw ConfigError("chunk length must be positive");
  std::map<std::uint64_t, std::vector<RawEvent>> by_user;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!events[i].duration) {
      throw FormatError("event " + std::to_string(i + 1) + " (user " +
                        std::to_string(events[i].user) + ") has no watch duration");
    }
    by_user[events[i].user].push_back(events[i]);
  }

  PreprocessResult out;
  for (auto& [user, evs] : by_user) {
    std::int64_t watched = 0;
    for (const RawEvent& e : evs) watched += *e.duration;
    if (evs.size() < config.min_records || watched < config.min_watch_seconds) continue;
    ++out.accounts;

    std::stable_sort(evs.begin(), evs.end(), [](const RawEvent& a, const RawEvent& b) {
      return std::tie(a.timestamp, a.domain, a.item) < std::tie(b.timestamp, b.domain, b.item);
    });
    // Merge replays within each domain's stream: a play of the same item
    // starting less than the window after the previous play joins it.
    std::vector<RawEvent> kept;
    std::int64_t last_start[2] = {-1, -1};
    std::ptrdiff_t last_kept[2] = {-1, -1};
    for (const RawEvent& e : evs) {
      const std::size_t d = index_of(e.domain);
      if (last_kept[d] >= 0 && kept[static_cast<std::size_t>(last_kept[d])].item == e.item &&
          e.timestamp - last_start[d] < config.merge_window_seconds) {
        RawEvent& k = kept[static_cast<std::size_t>(last_kept[d])];
        *k.duration += *e.duration;
        last_start[d] = e.timestamp;
        continue;
      }
      kept.push_back(e);
      last_kept[d] = static_cast<std::ptrdiff_t>(kept.size() - 1);
      last_start[d] = e.timestamp;
    }

    for (std::size_t s = 0; s + config.chunk <= kept.size(); s += config.chunk) {
      std::vector<Event> chunk;
      for (std::size_t i = s; i < s + config.chunk; ++i) chunk.push_back({kept[i].domain, kept[i].item});
      MixedSequence seq(std::move(chunk));
      if (seq.count(Domain::kA) > config.min_per_domain &&
          seq.count(Domain::kB) > config.min_per_domain) {
        out.sequences.push_back(std::move(seq));
      }
    }
  }
  return out;
}

}  // namespace psjnet
