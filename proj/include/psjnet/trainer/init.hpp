#ifndef PSJNET_TRAINER_INIT_HPP_
#define PSJNET_TRAINER_INIT_HPP_

#include <cstdint>

#include "psjnet/model/params.hpp"
#include "psjnet/numkernel/tensor.hpp"

namespace psjnet {

// Uniform in [-b, b] with b = sqrt(6 / (fan_in + fan_out)); fans come from
// the trailing two extents (a vector uses its length for both). Throws
// ShapeError on an empty shape.
nk::Tensor xavier_init(const nk::Shape& shape, std::uint64_t seed);
double xavier_bound(const nk::Shape& shape);

// Xavier weights, zero biases. Each tensor draws from its own stream keyed
// by (seed, name), so adding a tensor never shifts the others.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

}  // namespace psjnet

#endif  // PSJNET_TRAINER_INIT_HPP_
