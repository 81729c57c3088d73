#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tbps/core/tensor.hpp"

namespace tbps {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(std::span<const NamedTensor> params, AdamConfig config);

/// One bias-corrected Adam update using the gradients currently held by
/// `params` (missing gradients count as zero). Uses `state.config.lr`.
void adam_step(std::span<NamedTensor> params, AdamState& state);

}  // namespace tbps
