#pragma once

#include "tshape/tensor.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace tshape {

/// Projections of one multi-head attention block with model dimension d.
/// Weight matrices are [d×d] and act on row vectors (x·W + b); head h owns
/// columns [h·d/H, (h+1)·d/H) of the query, key and value projections.
struct AttentionWeights {
  std::size_t heads = 1;
  Tensor query_w, query_b;
  Tensor key_w, key_b;
  Tensor value_w, value_b;
  Tensor out_w, out_b;

  std::size_t dim() const { return query_w.dim(0); }
  /// (name, tensor) pairs in a fixed order.
  std::vector<std::pair<std::string, Tensor>> named() const;
};

/// Weights ~ N(0, 1/d), biases zero.
AttentionWeights make_attention_weights(std::size_t dim, std::size_t heads, std::mt19937_64& rng);

/// Scaled dot-product attention per head (scale 1/sqrt(d/H)), heads
/// concatenated and passed through the output projection. q, k, v are [L×d].
/// When `probs` is given it receives one [L×L] row-stochastic matrix per head.
Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionWeights& weights,
                           std::vector<RowMatrix>* probs = nullptr);

}  // namespace tshape
