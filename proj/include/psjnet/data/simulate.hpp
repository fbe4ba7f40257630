#ifndef PSJNET_DATA_SIMULATE_HPP_
#define PSJNET_DATA_SIMULATE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "psjnet/data/raw_log.hpp"
#include "psjnet/data/split.hpp"
#include "psjnet/model/sequence.hpp"

namespace psjnet {

struct YearInterval {
  int first;  // inclusive calendar years
  int last;
};

struct SimConfig {
  std::vector<YearInterval> intervals{{1996, 2000}, {2001, 2003}, {2004, 2006},
                                      {2007, 2009}, {2010, 2012}, {2013, 2015}};
  std::size_t min_users = 2;  // users merged into one account
  std::size_t max_users = 4;
  std::size_t min_a = 5;  // per sequence
  std::size_t min_b = 2;
  std::size_t min_length = 4;
  std::size_t max_length = 60;
  std::size_t floor_a = 5;  // keep items seen more than this often
  std::size_t floor_b = 10;
  std::size_t min_user_records = 10;  // keep users with more records than this
  SplitFractions fractions;
  std::uint64_t seed = 1;

  // Throws ConfigError.
  void validate() const;
};

struct SharedAccount {
  std::uint64_t id;  // synthetic, above every source user id
  std::size_t interval;
  std::vector<std::uint64_t> members;
};

struct SimSequence {
  std::uint64_t account;
  int year;
  MixedSequence seq;
};

struct SimResult {
  std::vector<SimSequence> sequences;  // account order, then year
  std::vector<SharedAccount> accounts;
  std::size_t users = 0;  // users left after the cross-domain filter
};

// Items of each domain that occur more often than that domain's floor,
// counted over per-user histories with adjacent same-item repeats removed.
// Ascending. Adding events never removes an item from either set.
std::array<std::vector<ItemId>, 2> frequent_items(std::span<const RawEvent> events,
                                                  const SimConfig& config);

// Order, dedupe, frequency floors, cross-domain user filter, per-interval
// random grouping into accounts, calendar-year slicing and the per-sequence
// constraints. Throws SimulationError naming the stage that left nothing.
SimResult simulate_shared_accounts(std::span<const RawEvent> events, const SimConfig& config);

}  // namespace psjnet

#endif  // PSJNET_DATA_SIMULATE_HPP_
