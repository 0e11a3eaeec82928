#pragma once

#include <cmath>
#include <cstddef>

#include "eegbench/nn/tensor.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::nn {

// Uniform in [-limit, limit] with limit = sqrt(6 / (fan_in + fan_out)).
inline void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.storage()) v = rng.uniform(-limit, limit);
}

}  // namespace eegbench::nn
