#include "psjnet/model/params.hpp"

#include <algorithm>

#include "psjnet/error.hpp"

namespace psjnet {

std::string to_string(Variant v) {
  return v == Variant::kSplitByJoin ? "psjnet1" : "psjnet2";
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoParallel: return "psj";
    case Ablation::kNoSplitByJoin: return "sj";
    case Ablation::kNoSplit: return "s";
    case Ablation::kNoJoin: return "j";
  }
  return "none";
}

Variant parse_variant(std::string_view s) {
  if (s == "psjnet1") return Variant::kSplitByJoin;
  if (s == "psjnet2") return Variant::kSplitAndJoin;
  throw ConfigError("unknown variant '" + std::string(s) + "' (psjnet1|psjnet2)");
}

Ablation parse_ablation(std::string_view s) {
  if (s == "none" || s.empty()) return Ablation::kNone;
  if (s == "psj") return Ablation::kNoParallel;
  if (s == "sj") return Ablation::kNoSplitByJoin;
  if (s == "s") return Ablation::kNoSplit;
  if (s == "j") return Ablation::kNoJoin;
  throw ConfigError("unknown ablation '" + std::string(s) + "' (psj|sj|s|j)");
}

void ModelConfig::validate() const {
  if (hidden == 0) throw ConfigError("hidden size must be positive");
  if (roles == 0) throw ConfigError("role count K must be at least 1");
  if (vocab_a == 0 || vocab_b == 0) throw ConfigError("vocabularies must be non-empty");
  const bool v1 = variant == Variant::kSplitByJoin;
  if (v1 && (ablation == Ablation::kNoSplit || ablation == Ablation::kNoJoin)) {
    throw ConfigError("ablation '" + to_string(ablation) +
                      "' applies to psjnet2 only; psjnet1's split-by-join unit is indivisible");
  }
  if (!v1 && ablation == Ablation::kNoSplitByJoin) {
    throw ConfigError("ablation 'sj' applies to psjnet1 only");
  }
}

namespace names {

std::string domain_prefix(Domain d) { return std::string(1, domain_char(d)); }

std::string direction_prefix(Domain src) {
  return std::string{domain_char(src), domain_char(other(src))};
}

std::string embedding(Domain d) { return domain_prefix(d) + ".emb"; }

std::string encoder(Domain d, std::string_view gate) {
  return domain_prefix(d) + ".enc." + std::string(gate);
}

std::string decoder_weight(Domain d) { return domain_prefix(d) + ".dec.w"; }
std::string decoder_bias(Domain d) { return domain_prefix(d) + ".dec.b"; }
std::string roles(Domain src) { return direction_prefix(src) + ".roles"; }

std::string gate(Domain src, std::string_view part) {
  return direction_prefix(src) + ".gate." + std::string(part);
}

std::string cand(Domain src, std::string_view part) {
  return direction_prefix(src) + ".cand." + std::string(part);
}

std::string none_gate(Domain src, std::string_view part) {
  return direction_prefix(src) + ".none." + std::string(part);
}

std::string transfer(Domain src, int role, std::string_view gate) {
  std::string base = direction_prefix(src) + ".xfer";
  if (role >= 0) base += std::to_string(role);
  return base + "." + std::string(gate);
}

std::string join(Domain src, int stage, std::string_view part) {
  return direction_prefix(src) + ".join" + std::to_string(stage) + "." +
         std::string(part);
}

}  // namespace names

namespace {

void add_gru(std::vector<ParamSpec>& out, const std::string& prefix_update,
             const std::string& prefix_reset, const std::string& prefix_cand,
             std::size_t in, std::size_t d) {
  out.push_back({prefix_update, {d, in + d}});
  out.push_back({prefix_reset, {d, in + d}});
  out.push_back({prefix_cand, {d, in + d}});
}

void add_split(std::vector<ParamSpec>& out, Domain src, std::size_t d,
               std::size_t k) {
  out.push_back({names::roles(src), {k, d}});
  for (const char* p : {"w_src", "w_tgt", "u", "v"}) out.push_back({names::gate(src, p), {d, d}});
  out.push_back({names::gate(src, "b"), {d}, true});
  for (const char* p : {"w", "u", "v"}) out.push_back({names::cand(src, p), {d, d}});
  out.push_back({names::cand(src, "b"), {d}, true});
}

void add_join(std::vector<ParamSpec>& out, Domain src, std::size_t d) {
  for (int stage : {1, 2}) {
    out.push_back({names::join(src, stage, "v"), {d}});
    out.push_back({names::join(src, stage, "w_row"), {d, d}});
    out.push_back({names::join(src, stage, "w_in"), {d, d}});
  }
}

}  // namespace

std::vector<ParamSpec> parameter_layout(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.hidden;
  const std::size_t k = c.roles;
  std::vector<ParamSpec> out;
  for (Domain dom : kDomains) {
    out.push_back({names::embedding(dom), {c.vocab(dom), d}});
    add_gru(out, names::encoder(dom, "update"), names::encoder(dom, "reset"),
            names::encoder(dom, "cand"), d, d);
    out.push_back({names::decoder_weight(dom), {c.vocab(dom), 2 * d}});
    out.push_back({names::decoder_bias(dom), {c.vocab(dom)}, true});
  }
  if (!c.has_cross()) {
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.name < b.name; });
    return out;
  }
  for (Domain src : kDomains) {
    if (c.variant == Variant::kSplitByJoin) {
      if (c.ablation != Ablation::kNoSplitByJoin) add_split(out, src, d, k);
      add_gru(out, names::transfer(src, -1, "update"), names::transfer(src, -1, "reset"),
              names::transfer(src, -1, "cand"), d, d);
      continue;
    }
    if (c.ablation != Ablation::kNoSplit) {
      add_split(out, src, d, k);
      if (!c.none_gate_shares_weights) {
        for (const char* p : {"w_src", "w_tgt", "u"}) out.push_back({names::none_gate(src, p), {d, d}});
        out.push_back({names::none_gate(src, "b"), {d}, true});
      }
    }
    if (c.share_role_transfer) {
      add_gru(out, names::transfer(src, -1, "update"), names::transfer(src, -1, "reset"),
              names::transfer(src, -1, "cand"), d, d);
    } else {
      for (std::size_t r = 0; r < k; ++r) {
        const int ri = static_cast<int>(r);
        add_gru(out, names::transfer(src, ri, "update"), names::transfer(src, ri, "reset"),
                names::transfer(src, ri, "cand"), d, d);
      }
    }
    if (c.ablation != Ablation::kNoJoin) add_join(out, src, d);
  }
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.name < b.name; });
  return out;
}

ModelParams zero_params(const ModelConfig& config) {
  ModelParams p;
  p.config = config;
  for (const ParamSpec& s : parameter_layout(config)) p.tensors.add(s.name, nk::Tensor(s.shape));
  return p;
}

}  // namespace psjnet
