#include "psjnet/trainer/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "psjnet/error.hpp"
#include "psjnet/numkernel/random.hpp"

namespace psjnet {

void clip_gradients(nk::GradMap& grads, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("clip range needs lo < hi");
  for (auto& [name, g] : grads) {
    for (double& x : g.storage()) x = std::min(hi, std::max(lo, x));
  }
}

void adam_step(nk::ParamStore& params, const nk::GradMap& grads, AdamState& state,
               const AdamConfig& c) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw ConfigError("gradient for unknown parameter '" + name + "'");
    if (g.shape() != params.at(name).shape()) {
      throw ShapeError("gradient of '" + name + "' has shape " + nk::shape_string(g.shape()));
    }
    if (!g.all_finite()) throw NumericsError("non-finite gradient for parameter '" + name + "'");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (const auto& [name, g] : grads) {
    nk::Tensor& theta = params.at(name);
    auto mi = state.m.try_emplace(name, nk::Tensor(g.shape())).first;
    auto vi = state.v.try_emplace(name, nk::Tensor(g.shape())).first;
    auto th = theta.data();
    auto m = mi->second.data();
    auto v = vi->second.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gd[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gd[i] * gd[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      th[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

nk::Tensor apply_dropout(const nk::Tensor& h, double keep_prob, bool training,
                         std::uint64_t seed) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ConfigError("keep probability must lie in (0, 1]");
  }
  if (!training || keep_prob == 1.0) return h;
  nk::Tensor out = nk::dropout_mask(h.shape(), keep_prob, seed);
  auto o = out.data();
  auto x = h.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= x[i];
  return out;
}

}  // namespace psjnet
