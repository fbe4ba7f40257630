#ifndef PSJNET_MODEL_SEQUENCE_HPP_
#define PSJNET_MODEL_SEQUENCE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace psjnet {

enum class Domain : std::uint8_t { kA = 0, kB = 1 };

inline constexpr Domain other(Domain d) {
  return d == Domain::kA ? Domain::kB : Domain::kA;
}
inline constexpr std::size_t index_of(Domain d) { return static_cast<std::size_t>(d); }
inline constexpr char domain_char(Domain d) { return d == Domain::kA ? 'A' : 'B'; }
inline constexpr Domain kDomains[] = {Domain::kA, Domain::kB};

// Raw item id at file level; dense vocabulary index once encoded.
using ItemId = std::uint64_t;

struct Event {
  Domain domain = Domain::kA;
  ItemId item = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

// Teacher-forcing target: predict `item` of `domain` from the events strictly
// before `cutoff` (an index into the mixed event list).
struct Target {
  Domain domain;
  std::size_t cutoff;
  ItemId item;
};

// One account's interleaved two-domain event list. Per-domain positions and
// cross-domain alignment are derived on construction.
class MixedSequence {
 public:
  MixedSequence() = default;
  explicit MixedSequence(std::vector<Event> events);

  std::span<const Event> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  std::size_t count(Domain d) const { return positions_[index_of(d)].size(); }

  // Mixed-list indices of the events of domain `d`, in order.
  std::span<const std::size_t> positions(Domain d) const {
    return positions_[index_of(d)];
  }
  // Item of the `row`-th event of domain `d`.
  ItemId item(Domain d, std::size_t row) const {
    return events_[positions_[index_of(d)][row]].item;
  }
  // For every event of domain `d`: the row index of the most recent event of
  // the other domain before it, or -1. Non-decreasing.
  std::span<const int> cross_alignment(Domain d) const {
    return alignment_[index_of(d)];
  }
  // Number of domain-`d` events strictly before mixed index `cutoff`.
  std::size_t rows_before(Domain d, std::size_t cutoff) const;

  std::optional<ItemId> final_item(Domain d) const;
  std::optional<std::size_t> final_position(Domain d) const;

  // Next-item targets: every in-domain event except the first.
  std::vector<Target> targets(Domain d) const;

  friend bool operator==(const MixedSequence& a, const MixedSequence& b) {
    return a.events_ == b.events_;
  }

 private:
  std::vector<Event> events_;
  std::vector<std::size_t> positions_[2];
  std::vector<int> alignment_[2];
};

// Item id <-> dense index bijection for one domain. Ids are kept sorted so
// the mapping only depends on the id set.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(Domain domain, std::vector<ItemId> ids);

  static Vocabulary from_sequences(Domain domain,
                                   std::span<const MixedSequence> seqs);

  Domain domain() const { return domain_; }
  std::size_t size() const { return ids_.size(); }
  std::optional<std::size_t> find(ItemId id) const;
  // Throws VocabError for unknown ids.
  std::size_t index(ItemId id) const;
  ItemId id(std::size_t index) const;
  const std::vector<ItemId>& ids() const { return ids_; }
  // FNV-1a over the sorted ids; identifies the vocabulary in checkpoints.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.domain_ == b.domain_ && a.ids_ == b.ids_;
  }

 private:
  Domain domain_ = Domain::kA;
  std::vector<ItemId> ids_;
  std::unordered_map<ItemId, std::size_t> index_;
};

struct EncodeStats {
  std::size_t dropped_events = 0;
};

// Maps raw ids to dense indices. Unknown ids throw VocabError unless
// `stats` is given, in which case those events are dropped and counted.
MixedSequence encode(const MixedSequence& raw, const Vocabulary& vocab_a,
                     const Vocabulary& vocab_b, EncodeStats* stats = nullptr);
MixedSequence decode(const MixedSequence& indexed, const Vocabulary& vocab_a,
                     const Vocabulary& vocab_b);

// Throws VocabError if an index is outside [0, size) of its domain.
void check_indices(const MixedSequence& seq, std::size_t vocab_a,
                   std::size_t vocab_b);

}  // namespace psjnet

#endif  // PSJNET_MODEL_SEQUENCE_HPP_
