#pragma once

#include "tshape/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tshape {

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update using each parameter's accumulated
/// gradient (a missing gradient counts as zero). Moments are created on the
/// first call and must keep matching the parameter sizes afterwards.
void adam_step(std::span<Tensor> params, AdamState& state);

void zero_grad(std::span<Tensor> params);

}  // namespace tshape
