#pragma once

// Differentiable operations on Tensor. All functions are pure in their
// inputs except batchnorm1d in training mode, which also updates the
// running statistics it is handed.

#include "tshape/tensor.hpp"

#include <span>

namespace tshape {

// Elementwise (shapes must match exactly).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// 1 - a
Tensor one_minus(const Tensor& a);
Tensor square(const Tensor& a);

/// a[m×n] + bias[n] broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, const Shape& shape);

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);

Tensor softmax_lastdim(const Tensor& x);
/// tanh approximation: 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715x^3))).
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// Scalar sum / mean of all entries.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// mean((a - b)^2) as a scalar.
Tensor mse_loss(const Tensor& a, const Tensor& b);
/// Mean over the last axis, dropping it: [..., n] -> [...]; rank-1 gives [1].
Tensor mean_lastdim(const Tensor& x);

/// Same-length cross-correlation with zero padding (k-1)/2 on each side.
/// x is [C_in×L] or batched [N×C_in×L]; kernels [C_out×C_in×k]; bias [C_out].
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias);

/// Moving average over rows of x[N×L] with odd window k, truncated at the
/// borders so each output averages only in-range samples.
Tensor avg_pool_same(const Tensor& x, std::size_t k);

enum class NormMode { train, eval };

struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-column normalization of x[N×C]. Train mode uses biased batch
/// variance and folds the batch moments into `stats`; eval mode reads them.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                   NormMode mode);

}  // namespace tshape
