#include "tshape/attention.hpp"

#include "tshape/errors.hpp"
#include "tshape/ops.hpp"

#include <cmath>

namespace tshape {

std::vector<std::pair<std::string, Tensor>> AttentionWeights::named() const {
  return {{"query_w", query_w}, {"query_b", query_b}, {"key_w", key_w},  {"key_b", key_b},
          {"value_w", value_w}, {"value_b", value_b}, {"out_w", out_w}, {"out_b", out_b}};
}

AttentionWeights make_attention_weights(std::size_t dim, std::size_t heads, std::mt19937_64& rng) {
  if (heads == 0 || dim % heads != 0)
    throw ConfigError(std::to_string(heads) + " attention heads do not divide model dimension " + std::to_string(dim));
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  AttentionWeights w;
  w.heads = heads;
  w.query_w = Tensor::randn({dim, dim}, rng, sd);
  w.key_w = Tensor::randn({dim, dim}, rng, sd);
  w.value_w = Tensor::randn({dim, dim}, rng, sd);
  w.out_w = Tensor::randn({dim, dim}, rng, sd);
  w.query_b = Tensor::zeros({dim});
  w.key_b = Tensor::zeros({dim});
  w.value_b = Tensor::zeros({dim});
  w.out_b = Tensor::zeros({dim});
  for (auto& [name, t] : w.named()) t.set_requires_grad();
  return w;
}

Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionWeights& weights,
                           std::vector<RowMatrix>* probs) {
  const std::size_t d = weights.dim();
  if (weights.heads == 0 || d % weights.heads != 0)
    throw ConfigError(std::to_string(weights.heads) + " attention heads do not divide model dimension " +
                      std::to_string(d));
  for (const Tensor* t : {&q, &k, &v})
    if (t->rank() != 2 || t->dim(1) != d)
      throw DimensionError("multihead_attention: input " + shape_string(t->shape()) + " does not have model dimension " +
                           std::to_string(d));
  if (k.dim(0) != v.dim(0)) throw DimensionError("multihead_attention: key and value lengths differ");

  const std::size_t dh = d / weights.heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor qp = add_bias(matmul(q, weights.query_w), weights.query_b);
  const Tensor kp = add_bias(matmul(k, weights.key_w), weights.key_b);
  const Tensor vp = add_bias(matmul(v, weights.value_w), weights.value_b);

  if (probs) probs->clear();
  std::vector<Tensor> head_out;
  head_out.reserve(weights.heads);
  for (std::size_t h = 0; h < weights.heads; ++h) {
    const Tensor qh = slice_cols(qp, h * dh, dh);
    const Tensor kh = slice_cols(kp, h * dh, dh);
    const Tensor vh = slice_cols(vp, h * dh, dh);
    const Tensor attn = softmax_lastdim(scale(matmul(qh, transpose(kh)), scale_factor));
    if (probs) probs->emplace_back(attn.matrix());
    head_out.push_back(matmul(attn, vh));
  }
  const Tensor merged = weights.heads == 1 ? head_out.front() : concat_cols(head_out);
  return add_bias(matmul(merged, weights.out_w), weights.out_b);
}

}  // namespace tshape
