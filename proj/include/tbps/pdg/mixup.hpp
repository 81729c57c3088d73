#pragma once

#include "tbps/core/tensor.hpp"

namespace tbps::pdg {

struct MixupConfig {
  double lambda = 0.5;
  double probability = 0.5;

  void validate() const;
};

/// lambda * z1 + (1 - lambda) * z2, differentiable in both inputs.
Tensor mixup_hidden(const Tensor& z1, const Tensor& z2, double lambda);

}  // namespace tbps::pdg
