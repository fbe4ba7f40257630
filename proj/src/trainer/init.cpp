#include "psjnet/trainer/init.hpp"

#include <cmath>

#include "psjnet/error.hpp"
#include "psjnet/numkernel/random.hpp"

namespace psjnet {

double xavier_bound(const nk::Shape& shape) {
  if (shape.empty()) throw ShapeError("xavier_init: empty shape");
  double fan_in = 0.0;
  double fan_out = 0.0;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else {
    fan_out = static_cast<double>(shape[shape.size() - 2]);
    fan_in = static_cast<double>(shape[shape.size() - 1]);
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

nk::Tensor xavier_init(const nk::Shape& shape, std::uint64_t seed) {
  const double bound = xavier_bound(shape);
  nk::Tensor t(shape);
  std::uint64_t state = seed;
  for (double& v : t.storage()) {
    state = nk::splitmix64(state);
    const double u = static_cast<double>(state >> 11) * 0x1.0p-53;  // [0, 1)
    v = (2.0 * u - 1.0) * bound;
  }
  return t;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p;
  p.config = config;
  for (const ParamSpec& s : parameter_layout(config)) {
    if (s.bias) {
      p.tensors.add(s.name, nk::Tensor(s.shape));
    } else {
      p.tensors.add(s.name, xavier_init(s.shape, nk::mix_seed(seed, {nk::hash_string(s.name)})));
    }
  }
  return p;
}

}  // namespace psjnet
