#pragma once

#include <memory>
#include <vector>

#include "tbps/core/tensor.hpp"

namespace tbps {

/// Recorded operations reachable from a root, in topological order (every
/// node appears after all of its inputs).
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<TensorNode*>& nodes() const { return nodes_; }

 private:
  std::vector<TensorNode*> nodes_;
};

/// Reverse-mode pass: seeds d(loss)/d(loss) = 1 and accumulates gradients
/// into every tensor on the tape that requires them. Each node's rule runs
/// exactly once. Throws DimensionError when `loss` is not a scalar.
void backward(const Tensor& loss, const Tape& tape);
void backward(const Tensor& loss);

}  // namespace tbps
