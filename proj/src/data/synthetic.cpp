#include "psjnet/data/synthetic.hpp"

#include "psjnet/error.hpp"
#include "psjnet/numkernel/random.hpp"

namespace psjnet {

namespace {
constexpr std::size_t kMinA = 5;
constexpr std::size_t kMinB = 2;
constexpr std::size_t kMaxLength = 60;
}  // namespace

void SynthConfig::validate() const {
  if (!(signal >= 0.0 && signal <= 1.0)) throw ConfigError("signal strength must lie in [0, 1]");
  if (!(b_rate > 0.0 && b_rate <= 1.0)) throw ConfigError("B emission rate must lie in (0, 1]");
  if (accounts == 0 || sequences_per_account == 0) throw ConfigError("need at least one sequence");
  if (role_items == 0) throw ConfigError("role item cycle must be non-empty");
  if (min_roles == 0 || min_roles > max_roles || max_roles > role_types) {
    throw ConfigError("roles per account must satisfy 1 <= min <= max <= role types");
  }
  if (min_length < 4 || min_length > max_length || max_length + 1 > kMaxLength) {
    throw ConfigError("sequence length bounds must lie within [4, 59]");
  }
  fractions.validate();
}

SynthDataset make_synthetic_benchmark(const SynthConfig& c) {
  c.validate();
  nk::Rng rng(c.seed);
  const std::size_t n_a = c.role_types * c.role_items;
  SynthDataset out;
  for (std::size_t acct = 0; acct < c.accounts; ++acct) {
    std::vector<std::size_t> types(c.role_types);
    for (std::size_t i = 0; i < types.size(); ++i) types[i] = i;
    rng.shuffle(types);
    types.resize(rng.between(c.min_roles, c.max_roles));
    std::vector<std::size_t> cursor(types.size());
    for (auto& p : cursor) p = rng.below(c.role_items);

    for (std::size_t s = 0; s < c.sequences_per_account; ++s) {
      const std::size_t target = rng.between(c.min_length, c.max_length);
      std::vector<Event> evs;
      std::size_t n_a_events = 0, n_b_events = 0;
      while (evs.size() < target || n_a_events < kMinA || n_b_events < kMinB) {
        const std::size_t r = rng.below(types.size());
        const ItemId a = synth_a_item(types[r], cursor[r], c.role_items);
        cursor[r] = (cursor[r] + 1) % c.role_items;
        evs.push_back({Domain::kA, a});
        ++n_a_events;
        if (rng.bernoulli(c.b_rate)) {
          const ItemId b = rng.bernoulli(c.signal) ? synth_link(a)
                                                   : synth_link(static_cast<ItemId>(rng.below(n_a) + 1));
          evs.push_back({Domain::kB, b});
          ++n_b_events;
        }
        if (evs.size() > kMaxLength) {
          throw ConfigError("B emission rate too low to meet the per-sequence minima");
        }
      }
      out.all.emplace_back(std::move(evs));
      out.account_of.push_back(acct);
    }
    out.roles_of.push_back(types);
  }
  out.splits = split_dataset(out.all, c.fractions, nk::mix_seed(c.seed, {0x5b117}));
  return out;
}

}  // namespace psjnet
