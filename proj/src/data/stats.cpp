#include "psjnet/data/stats.hpp"

#include <set>
#include <sstream>

namespace psjnet {

DatasetStats compute_stats(std::span<const MixedSequence> train,
                           std::span<const MixedSequence> valid,
                           std::span<const MixedSequence> test, std::size_t users) {
  DatasetStats s;
  std::set<ItemId> items[2];
  for (auto part : {train, valid, test}) {
    for (const MixedSequence& seq : part) {
      for (const Event& e : seq.events()) {
        items[index_of(e.domain)].insert(e.item);
        ++s.logs[index_of(e.domain)];
      }
    }
  }
  s.items[0] = items[0].size();
  s.items[1] = items[1].size();
  s.users = users;
  s.train = train.size();
  s.valid = valid.size();
  s.test = test.size();
  s.sequences = s.train + s.valid + s.test;
  return s;
}

std::string format_stats(const DatasetStats& s) {
  std::ostringstream os;
  auto row = [&](const std::string& label, std::size_t v) {
    std::string l = label;
    l.resize(26, ' ');
    os << l << v << "\n";
  };
  for (Domain d : kDomains) {
    os << domain_char(d) << "-domain\n";
    row("#Items", s.items[index_of(d)]);
    row("#Logs", s.logs[index_of(d)]);
  }
  row("#Overlapped-users", s.users);
  row("#Sequences", s.sequences);
  row("#Training-sequences", s.train);
  row("#Validation-sequences", s.valid);
  row("#Test-sequences", s.test);
  return os.str();
}

}  // namespace psjnet
