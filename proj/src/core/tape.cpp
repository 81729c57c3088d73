#include "tbps/core/tape.hpp"

#include <unordered_set>
#include <utility>

#include "tbps/core/errors.hpp"

namespace tbps {

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.defined() || !root.requires_grad()) return tape;
  // Iterative post-order DFS; graphs for deep models are too deep for recursion.
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      TensorNode* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    tape.nodes_.push_back(node);
    stack.pop_back();
  }
  return tape;
}

void backward(const Tensor& loss, const Tape& tape) {
  if (loss.numel() != 1)
    throw DimensionError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;
  const auto& nodes = tape.nodes();
  if (nodes.empty() || nodes.back() != loss.node().get())
    throw DimensionError("backward: loss is not the root of the supplied tape");
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

void backward(const Tensor& loss) { backward(loss, Tape::record(loss)); }

}  // namespace tbps
