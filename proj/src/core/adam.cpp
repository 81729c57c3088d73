#include "tbps/core/adam.hpp"

#include <cmath>

#include "tbps/core/errors.hpp"

namespace tbps {

AdamState make_adam_state(std::span<const NamedTensor> params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.m.emplace_back(p.tensor.numel(), 0.0);
    state.v.emplace_back(p.tensor.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<NamedTensor> params, AdamState& state) {
  if (params.size() != state.m.size())
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) +
                         " parameters, got " + std::to_string(params.size()));
  if (state.config.lr < 0.0) throw ParameterError("adam_step: negative learning rate");
  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& tensor = params[p].tensor;
    auto& m = state.m[p];
    auto& v = state.v[p];
    if (m.size() != tensor.numel())
      throw DimensionError("adam_step: moment size mismatch for " + params[p].name);
    const auto g = tensor.grad_view();
    auto w = tensor.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace tbps
