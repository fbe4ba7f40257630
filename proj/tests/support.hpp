#ifndef PSJNET_TESTS_SUPPORT_HPP_
#define PSJNET_TESTS_SUPPORT_HPP_

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "psjnet/data/raw_log.hpp"
#include "psjnet/model/params.hpp"
#include "psjnet/model/sequence.hpp"
#include "psjnet/numkernel/random.hpp"
#include "psjnet/trainer/init.hpp"

namespace psjnet::test {

// Encoded sequence of `length` events over dense indices; each domain gets
// at least `min_each` events when length allows.
inline MixedSequence random_sequence(nk::Rng& rng, std::size_t vocab_a, std::size_t vocab_b,
                                     std::size_t length, std::size_t min_each = 1) {
  std::vector<Event> ev;
  for (std::size_t i = 0; i < length; ++i) {
    const Domain d = rng.bernoulli(0.5) ? Domain::kA : Domain::kB;
    ev.push_back({d, rng.below(d == Domain::kA ? vocab_a : vocab_b)});
  }
  for (std::size_t i = 0; i < min_each && 2 * i + 1 < length; ++i) {
    ev[2 * i] = {Domain::kA, rng.below(vocab_a)};
    ev[2 * i + 1] = {Domain::kB, rng.below(vocab_b)};
  }
  return MixedSequence(std::move(ev));
}

// Xavier weights plus random biases so that no parameter sits at a special
// point (zero biases make some gradients vanish identically).
inline ModelParams random_params(const ModelConfig& c, std::uint64_t seed, double bias_scale = 0.3) {
  ModelParams p = init_params(c, seed);
  nk::Rng rng(nk::mix_seed(seed, {0xb1a5}));
  for (const ParamSpec& s : parameter_layout(c)) {
    if (!s.bias) continue;
    for (double& v : p.tensors.at(s.name).storage()) v = bias_scale * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

inline ModelConfig toy_config(Variant v, std::size_t va = 20, std::size_t vb = 15,
                              std::size_t d = 8, std::size_t k = 2) {
  ModelConfig c;
  c.variant = v;
  c.vocab_a = va;
  c.vocab_b = vb;
  c.hidden = d;
  c.roles = k;
  return c;
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Seconds since the epoch at 00:00 UTC on 1 January of `year`.
inline std::int64_t year_start(int year) {
  using namespace std::chrono;
  return sys_seconds{sys_days{std::chrono::year{year} / 1 / 1}}.time_since_epoch().count();
}

// Raw two-domain log: each user is active in 1-3 consecutive years of
// 1996-2014 with 8-20 events per active year. Item popularity is skewed so
// the frequency floors keep a core of items.
inline std::vector<RawEvent> synthetic_raw_log(std::size_t users, std::uint64_t seed) {
  nk::Rng rng(seed);
  std::vector<RawEvent> out;
  for (std::size_t u = 1; u <= users; ++u) {
    const int first = 1996 + static_cast<int>(rng.below(17));
    const int span = 1 + static_cast<int>(rng.below(3));
    for (int y = first; y < first + span && y <= 2014; ++y) {
      const std::size_t n = rng.between(8, 20);
      for (std::size_t i = 0; i < n; ++i) {
        RawEvent e;
        e.user = u;
        e.domain = rng.bernoulli(0.6) ? Domain::kA : Domain::kB;
        const double x = rng.uniform();
        e.item = 1 + static_cast<ItemId>(x * x * (e.domain == Domain::kA ? 60.0 : 30.0));
        e.timestamp = year_start(y) + static_cast<std::int64_t>(rng.below(364 * 86400));
        out.push_back(e);
      }
    }
  }
  return out;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    nk::Rng rng(nk::hash_string(tag) ^ static_cast<std::uint64_t>(
                                           std::filesystem::file_time_type::clock::now()
                                               .time_since_epoch()
                                               .count()));
    path_ = std::filesystem::temp_directory_path() /
            ("psjnet_" + tag + "_" + std::to_string(rng.next() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace psjnet::test

#endif  // PSJNET_TESTS_SUPPORT_HPP_
