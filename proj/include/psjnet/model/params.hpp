#ifndef PSJNET_MODEL_PARAMS_HPP_
#define PSJNET_MODEL_PARAMS_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "psjnet/model/sequence.hpp"
#include "psjnet/numkernel/tensor.hpp"

namespace psjnet {

enum class Variant {
  kSplitByJoin,   // PSJNet-I
  kSplitAndJoin,  // PSJNet-II
};

enum class Ablation {
  kNone,
  kNoParallel,     // -PSJ: no cross-domain representation at all
  kNoSplitByJoin,  // -SJ (variant I): plain transfer GRU over encoder states
  kNoSplit,        // -S (variant II): encoder states feed the role transfer GRUs
  kNoJoin,         // -J (variant II): role vectors are summed
};

std::string to_string(Variant v);
std::string to_string(Ablation a);
// "psjnet1" / "psjnet2".
Variant parse_variant(std::string_view s);
// "none", "psj", "sj", "s", "j".
Ablation parse_ablation(std::string_view s);

struct ModelConfig {
  Variant variant = Variant::kSplitAndJoin;
  Ablation ablation = Ablation::kNone;
  std::size_t hidden = 90;
  std::size_t roles = 4;
  std::size_t vocab_a = 0;
  std::size_t vocab_b = 0;
  // Variant II: one transfer GRU for all roles instead of one per role.
  bool share_role_transfer = false;
  // Variant II: the "none" gate reuses the role gates' weights (without the
  // role-embedding term) instead of its own.
  bool none_gate_shares_weights = false;

  std::size_t vocab(Domain d) const { return d == Domain::kA ? vocab_a : vocab_b; }
  bool has_cross() const { return ablation != Ablation::kNoParallel; }
  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ParamSpec {
  std::string name;
  nk::Shape shape;
  bool bias = false;
};

// Every trainable tensor the configuration uses, in name order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& config);

struct ModelParams {
  ModelConfig config;
  nk::ParamStore tensors;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// All tensors zero. Trainer's init_params() draws Xavier values instead.
ModelParams zero_params(const ModelConfig& config);

// Parameter naming. `direction` is the source domain of a transfer direction
// ("AB" carries A information into B predictions).
namespace names {
std::string domain_prefix(Domain d);     // "A" / "B"
std::string direction_prefix(Domain src);  // "AB" / "BA"
std::string embedding(Domain d);
std::string encoder(Domain d, std::string_view gate);  // update|reset|cand
std::string decoder_weight(Domain d);
std::string decoder_bias(Domain d);
std::string roles(Domain src);
std::string gate(Domain src, std::string_view part);   // w_src|w_tgt|u|v|b
std::string cand(Domain src, std::string_view part);   // w|u|v|b
std::string none_gate(Domain src, std::string_view part);  // w_src|w_tgt|u|b
// role < 0 addresses the single (shared) transfer GRU.
std::string transfer(Domain src, int role, std::string_view gate);
std::string join(Domain src, int stage, std::string_view part);  // v|w_row|w_in
}  // namespace names

}  // namespace psjnet

#endif  // PSJNET_MODEL_PARAMS_HPP_
