#include "tshape/optim.hpp"

#include "tshape/errors.hpp"

#include <cmath>

namespace tshape {

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Eigen::VectorXd::Zero(p.values().size()));
      state.v.push_back(Eigen::VectorXd::Zero(p.values().size()));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: optimizer tracks " + std::to_string(state.m.size()) + " parameters, got " +
                         std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (state.m[i].size() != params[i].values().size() || state.v[i].size() != params[i].values().size())
      throw DimensionError("adam_step: moment size mismatch for parameter " + std::to_string(i) + " of shape " +
                           shape_string(params[i].shape()));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.has_grad()) {
      state.m[i] *= state.beta1;
      state.v[i] *= state.beta2;
    } else {
      const auto& g = p.impl()->grad;
      state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
      state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseAbs2();
    }
    p.values().array() -=
        state.lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + state.eps);
  }
}

void zero_grad(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace tshape
