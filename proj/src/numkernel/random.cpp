#include "psjnet/numkernel/random.hpp"

#include "psjnet/error.hpp"

namespace psjnet::nk {

Tensor dropout_mask(const Shape& shape, double keep_prob, std::uint64_t seed) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ConfigError("keep probability must lie in (0, 1]");
  }
  Tensor mask(shape);
  const double scale = 1.0 / keep_prob;
  std::uint64_t state = seed;
  for (double& m : mask.storage()) {
    state = splitmix64(state);
    const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
    m = u < keep_prob ? scale : 0.0;
  }
  return mask;
}

}  // namespace psjnet::nk
