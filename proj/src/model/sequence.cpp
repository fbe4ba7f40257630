#include "psjnet/model/sequence.hpp"

#include <algorithm>
#include <set>

#include "psjnet/error.hpp"

namespace psjnet {

MixedSequence::MixedSequence(std::vector<Event> events)
    : events_(std::move(events)) {
  int last_row[2] = {-1, -1};
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const std::size_t d = index_of(events_[i].domain);
    positions_[d].push_back(i);
    alignment_[d].push_back(last_row[1 - d]);
    last_row[d] = static_cast<int>(positions_[d].size()) - 1;
  }
}

std::size_t MixedSequence::rows_before(Domain d, std::size_t cutoff) const {
  const auto& pos = positions_[index_of(d)];
  return static_cast<std::size_t>(
      std::lower_bound(pos.begin(), pos.end(), cutoff) - pos.begin());
}

std::optional<ItemId> MixedSequence::final_item(Domain d) const {
  const auto& pos = positions_[index_of(d)];
  if (pos.empty()) return std::nullopt;
  return events_[pos.back()].item;
}

std::optional<std::size_t> MixedSequence::final_position(Domain d) const {
  const auto& pos = positions_[index_of(d)];
  if (pos.empty()) return std::nullopt;
  return pos.back();
}

std::vector<Target> MixedSequence::targets(Domain d) const {
  std::vector<Target> out;
  const auto& pos = positions_[index_of(d)];
  for (std::size_t r = 1; r < pos.size(); ++r) {
    out.push_back({d, pos[r], events_[pos[r]].item});
  }
  return out;
}

Vocabulary::Vocabulary(Domain domain, std::vector<ItemId> ids)
    : domain_(domain), ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

Vocabulary Vocabulary::from_sequences(Domain domain,
                                      std::span<const MixedSequence> seqs) {
  std::set<ItemId> ids;
  for (const MixedSequence& s : seqs) {
    for (const Event& e : s.events()) {
      if (e.domain == domain) ids.insert(e.item);
    }
  }
  return Vocabulary(domain, std::vector<ItemId>(ids.begin(), ids.end()));
}

std::optional<std::size_t> Vocabulary::find(ItemId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index(ItemId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw VocabError(std::string("unknown ") + domain_char(domain_) +
                     "-domain item id " + std::to_string(id));
  }
  return it->second;
}

ItemId Vocabulary::id(std::size_t index) const {
  if (index >= ids_.size()) {
    throw VocabError(std::string(1, domain_char(domain_)) + "-domain index " +
                     std::to_string(index) + " outside vocabulary of size " +
                     std::to_string(ids_.size()));
  }
  return ids_[index];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(domain_));
  for (ItemId id : ids_) mix(id);
  return h;
}

MixedSequence encode(const MixedSequence& raw, const Vocabulary& vocab_a,
                     const Vocabulary& vocab_b, EncodeStats* stats) {
  std::vector<Event> out;
  out.reserve(raw.size());
  for (const Event& e : raw.events()) {
    const Vocabulary& v = e.domain == Domain::kA ? vocab_a : vocab_b;
    if (stats != nullptr) {
      if (auto idx = v.find(e.item)) {
        out.push_back({e.domain, *idx});
      } else {
        ++stats->dropped_events;
      }
    } else {
      out.push_back({e.domain, v.index(e.item)});
    }
  }
  return MixedSequence(std::move(out));
}

MixedSequence decode(const MixedSequence& indexed, const Vocabulary& vocab_a,
                     const Vocabulary& vocab_b) {
  std::vector<Event> out;
  out.reserve(indexed.size());
  for (const Event& e : indexed.events()) {
    const Vocabulary& v = e.domain == Domain::kA ? vocab_a : vocab_b;
    out.push_back({e.domain, v.id(e.item)});
  }
  return MixedSequence(std::move(out));
}

void check_indices(const MixedSequence& seq, std::size_t vocab_a,
                   std::size_t vocab_b) {
  for (const Event& e : seq.events()) {
    const std::size_t limit = e.domain == Domain::kA ? vocab_a : vocab_b;
    if (e.item >= limit) {
      throw VocabError(std::string(1, domain_char(e.domain)) + "-domain index " +
                       std::to_string(e.item) + " outside vocabulary of size " +
                       std::to_string(limit));
    }
  }
}

}  // namespace psjnet
