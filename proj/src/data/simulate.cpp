#include "psjnet/data/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <tuple>

#include "psjnet/error.hpp"
#include "psjnet/numkernel/random.hpp"

namespace psjnet {

void SimConfig::validate() const {
  if (intervals.empty()) throw ConfigError("simulator needs at least one interval");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].first > intervals[i].last) throw ConfigError("interval years out of order");
    if (i > 0 && intervals[i].first <= intervals[i - 1].last) {
      throw ConfigError("intervals must be increasing and disjoint");
    }
  }
  if (min_users < 1 || min_users > max_users) throw ConfigError("bad users-per-account range");
  if (min_length > max_length) throw ConfigError("bad sequence length bounds");
  fractions.validate();
}

namespace {

int calendar_year(std::int64_t ts) {
  using namespace std::chrono;
  const sys_days day = floor<days>(sys_seconds{seconds{ts}});
  return static_cast<int>(year_month_day{day}.year());
}

bool event_before(const RawEvent& a, const RawEvent& b) {
  return std::tie(a.timestamp, a.user, a.domain, a.item) <
         std::tie(b.timestamp, b.user, b.domain, b.item);
}

using Histories = std::map<std::uint64_t, std::vector<RawEvent>>;

// Per-user time order; same-item repeats adjacent in that order collapse.
Histories user_histories(std::span<const RawEvent> events) {
  Histories by_user;
  for (const RawEvent& e : events) by_user[e.user].push_back(e);
  for (auto& [user, evs] : by_user) {
    std::stable_sort(evs.begin(), evs.end(), event_before);
    std::vector<RawEvent> kept;
    for (const RawEvent& e : evs) {
      if (!kept.empty() && kept.back().domain == e.domain && kept.back().item == e.item) continue;
      kept.push_back(e);
    }
    evs = std::move(kept);
  }
  return by_user;
}

std::array<std::vector<ItemId>, 2> frequent_items(const Histories& by_user, const SimConfig& config) {
  std::map<ItemId, std::size_t> freq[2];
  for (const auto& [user, evs] : by_user) {
    for (const RawEvent& e : evs) ++freq[index_of(e.domain)][e.item];
  }
  const std::size_t floor[2] = {config.floor_a, config.floor_b};
  std::array<std::vector<ItemId>, 2> out;
  for (std::size_t d = 0; d < 2; ++d) {
    for (const auto& [item, n] : freq[d]) {
      if (n > floor[d]) out[d].push_back(item);
    }
  }
  return out;
}

}  // namespace

std::array<std::vector<ItemId>, 2> frequent_items(std::span<const RawEvent> events,
                                                  const SimConfig& config) {
  return frequent_items(user_histories(events), config);
}

SimResult simulate_shared_accounts(std::span<const RawEvent> events, const SimConfig& config) {
  config.validate();
  if (events.empty()) throw SimulationError("no input events");

  std::map<std::uint64_t, std::vector<RawEvent>> by_user = user_histories(events);
  std::uint64_t max_user = 0;
  for (const RawEvent& e : events) max_user = std::max(max_user, e.user);

  const auto frequent = frequent_items(by_user, config);
  std::size_t surviving = 0;
  for (auto& [user, evs] : by_user) {
    std::erase_if(evs, [&](const RawEvent& e) {
      const auto& keep = frequent[index_of(e.domain)];
      return !std::binary_search(keep.begin(), keep.end(), e.item);
    });
    surviving += evs.size();
  }
  if (surviving == 0) throw SimulationError("frequency floors removed every event");

  std::vector<std::uint64_t> users;
  for (const auto& [user, evs] : by_user) {
    const bool has_a = std::any_of(evs.begin(), evs.end(), [](auto& e) { return e.domain == Domain::kA; });
    const bool has_b = std::any_of(evs.begin(), evs.end(), [](auto& e) { return e.domain == Domain::kB; });
    if (has_a && has_b && evs.size() > config.min_user_records) users.push_back(user);
  }
  if (users.empty()) throw SimulationError("cross-domain user filter kept no user");

  SimResult result;
  result.users = users.size();
  std::uint64_t next_account = max_user + 1;
  for (std::size_t iv = 0; iv < config.intervals.size(); ++iv) {
    const YearInterval span = config.intervals[iv];
    std::vector<std::uint64_t> active;
    for (std::uint64_t u : users) {
      const auto& evs = by_user[u];
      if (std::any_of(evs.begin(), evs.end(), [&](const RawEvent& e) {
            const int y = calendar_year(e.timestamp);
            return y >= span.first && y <= span.last;
          })) {
        active.push_back(u);
      }
    }
    nk::Rng rng(nk::mix_seed(config.seed, {iv, 0x6a0c}));
    rng.shuffle(active);
    std::size_t pos = 0;
    while (active.size() - pos >= config.min_users) {
      const std::size_t want = rng.between(config.min_users, config.max_users);
      const std::size_t take = std::min(want, active.size() - pos);
      SharedAccount acct{next_account++, iv, {}};
      acct.members.assign(active.begin() + static_cast<std::ptrdiff_t>(pos),
                          active.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
      std::sort(acct.members.begin(), acct.members.end());

      std::vector<RawEvent> merged;
      for (std::uint64_t u : acct.members) {
        for (const RawEvent& e : by_user[u]) {
          const int y = calendar_year(e.timestamp);
          if (y >= span.first && y <= span.last) merged.push_back(e);
        }
      }
      std::stable_sort(merged.begin(), merged.end(), event_before);
      std::map<int, std::vector<Event>> by_year;
      for (const RawEvent& e : merged) by_year[calendar_year(e.timestamp)].push_back({e.domain, e.item});
      for (auto& [year, evs] : by_year) {
        MixedSequence seq(std::move(evs));
        if (seq.size() < config.min_length || seq.size() > config.max_length) continue;
        if (seq.count(Domain::kA) < config.min_a || seq.count(Domain::kB) < config.min_b) continue;
        result.sequences.push_back({acct.id, year, std::move(seq)});
      }
      result.accounts.push_back(std::move(acct));
    }
  }
  if (result.accounts.empty()) throw SimulationError("interval grouping formed no shared account");
  if (result.sequences.empty()) throw SimulationError("sequence constraints kept no sequence");
  return result;
}

}  // namespace psjnet
