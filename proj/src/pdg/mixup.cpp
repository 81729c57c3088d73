#include "tbps/pdg/mixup.hpp"

#include "tbps/core/errors.hpp"
#include "tbps/core/ops.hpp"

namespace tbps::pdg {

void MixupConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("mixup lambda must lie in [0, 1]");
  if (!(probability >= 0.0 && probability <= 1.0))
    throw ParameterError("mixup probability must lie in [0, 1]");
}

Tensor mixup_hidden(const Tensor& z1, const Tensor& z2, double lambda) {
  if (z1.shape() != z2.shape())
    throw DimensionError("mixup_hidden: states " + shape_str(z1.shape()) + " and " +
                         shape_str(z2.shape()) + " differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("mixup lambda must lie in [0, 1]");
  return ops::add(ops::scale(z1, lambda), ops::scale(z2, 1.0 - lambda));
}

}  // namespace tbps::pdg
