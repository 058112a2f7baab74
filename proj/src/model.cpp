#include "tshape/model.hpp"

#include "tshape/errors.hpp"

#include <cmath>
#include <random>

namespace tshape {

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_local: return "no_local";
    case Ablation::no_global: return "no_global";
    case Ablation::no_conv: return "no_conv";
    case Ablation::sliding_window: return "sliding_window";
  }
  return "full";
}

Ablation parse_ablation(std::string_view name) {
  for (auto a : {Ablation::full, Ablation::no_local, Ablation::no_global, Ablation::no_conv, Ablation::sliding_window})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown ablation '" + std::string(name) +
                    "' (expected full, no_local, no_global, no_conv or sliding_window)");
}

void ModelConfig::validate() const {
  if (window == 0 || patch == 0) throw ConfigError("window and patch length must be positive");
  if (window % patch != 0)
    throw ConfigError("window " + std::to_string(window) + " is not a multiple of patch length " + std::to_string(patch));
  if (kernel_sizes.empty()) throw ConfigError("at least one kernel size is required");
  for (auto k : kernel_sizes)
    if (k % 2 == 0) throw ConfigError("kernel sizes must be odd, got " + std::to_string(k));
  if (channels_per_scale == 0) throw ConfigError("channels per scale must be positive");
  if (heads_local == 0 || patch_count() % heads_local != 0)
    throw ConfigError("local heads " + std::to_string(heads_local) + " must divide patch count " +
                      std::to_string(patch_count()));
  if (heads_global == 0 || feature_dim() % heads_global != 0)
    throw ConfigError("global heads " + std::to_string(heads_global) + " must divide feature dimension " +
                      std::to_string(feature_dim()));
}

std::vector<std::pair<std::string, Tensor>> TShapeParams::learnable() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t m = 0; m < conv_weight.size(); ++m) {
    out.emplace_back("conv." + std::to_string(m) + ".weight", conv_weight[m]);
    out.emplace_back("conv." + std::to_string(m) + ".bias", conv_bias[m]);
  }
  if (bn_gamma.defined()) {
    out.emplace_back("bn.gamma", bn_gamma);
    out.emplace_back("bn.beta", bn_beta);
  }
  if (input_w.defined()) {
    out.emplace_back("input.weight", input_w);
    out.emplace_back("input.bias", input_b);
  }
  out.emplace_back("pos_embedding", pos_embedding);
  if (local.query_w.defined())
    for (auto& [name, t] : local.named()) out.emplace_back("local_attn." + name, t);
  if (global.query_w.defined())
    for (auto& [name, t] : global.named()) out.emplace_back("global_attn." + name, t);
  if (gate_w.defined()) {
    out.emplace_back("gate.weight", gate_w);
    out.emplace_back("gate.bias", gate_b);
  }
  out.emplace_back("head.weight", head_w);
  out.emplace_back("head.bias", head_b);
  return out;
}

std::vector<std::pair<std::string, Tensor>> TShapeParams::buffers() const {
  if (!bn.running_mean.defined()) return {};
  return {{"bn.running_mean", bn.running_mean}, {"bn.running_var", bn.running_var}};
}

std::vector<Tensor> TShapeParams::learnable_tensors() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : learnable()) out.push_back(t);
  return out;
}

namespace {

Tensor copy_of(const Tensor& t) { return t.defined() ? t.clone() : Tensor(); }

AttentionWeights copy_of(const AttentionWeights& w) {
  AttentionWeights c;
  c.heads = w.heads;
  c.query_w = copy_of(w.query_w);
  c.query_b = copy_of(w.query_b);
  c.key_w = copy_of(w.key_w);
  c.key_b = copy_of(w.key_b);
  c.value_w = copy_of(w.value_w);
  c.value_b = copy_of(w.value_b);
  c.out_w = copy_of(w.out_w);
  c.out_b = copy_of(w.out_b);
  return c;
}

}  // namespace

TShapeParams TShapeParams::clone() const {
  TShapeParams c;
  for (const auto& t : conv_weight) c.conv_weight.push_back(t.clone());
  for (const auto& t : conv_bias) c.conv_bias.push_back(t.clone());
  c.bn_gamma = copy_of(bn_gamma);
  c.bn_beta = copy_of(bn_beta);
  c.bn = bn;
  c.bn.running_mean = copy_of(bn.running_mean);
  c.bn.running_var = copy_of(bn.running_var);
  c.input_w = copy_of(input_w);
  c.input_b = copy_of(input_b);
  c.pos_embedding = copy_of(pos_embedding);
  c.local = copy_of(local);
  c.global = copy_of(global);
  c.gate_w = copy_of(gate_w);
  c.gate_b = copy_of(gate_b);
  c.head_w = copy_of(head_w);
  c.head_b = copy_of(head_b);
  return c;
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& config) {
  config.validate();
  const auto P = config.patch_count(), C = config.feature_dim(), s = config.patch, cm = config.channels_per_scale;
  std::vector<std::pair<std::string, Shape>> out;
  if (config.uses_conv()) {
    for (std::size_t m = 0; m < config.kernel_sizes.size(); ++m) {
      out.emplace_back("conv." + std::to_string(m) + ".weight", Shape{cm, 1, config.kernel_sizes[m]});
      out.emplace_back("conv." + std::to_string(m) + ".bias", Shape{cm});
    }
  }
  if (config.ablation != Ablation::no_conv) {
    out.emplace_back("bn.gamma", Shape{C});
    out.emplace_back("bn.beta", Shape{C});
  } else {
    out.emplace_back("input.weight", Shape{s, C});
    out.emplace_back("input.bias", Shape{C});
  }
  out.emplace_back("pos_embedding", Shape{P, C});
  const char* proj[] = {"query", "key", "value", "out"};
  if (config.uses_local())
    for (auto* p : proj) {
      out.emplace_back(std::string("local_attn.") + p + "_w", Shape{P, P});
      out.emplace_back(std::string("local_attn.") + p + "_b", Shape{P});
    }
  if (config.uses_global())
    for (auto* p : proj) {
      out.emplace_back(std::string("global_attn.") + p + "_w", Shape{C, C});
      out.emplace_back(std::string("global_attn.") + p + "_b", Shape{C});
    }
  if (config.uses_gate()) {
    out.emplace_back("gate.weight", Shape{2 * C, C});
    out.emplace_back("gate.bias", Shape{C});
  }
  out.emplace_back("head.weight", Shape{C, s});
  out.emplace_back("head.bias", Shape{s});
  if (config.ablation != Ablation::no_conv) {
    out.emplace_back("bn.running_mean", Shape{C});
    out.emplace_back("bn.running_var", Shape{C});
  }
  return out;
}

TShapeParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const auto P = config.patch_count(), C = config.feature_dim(), s = config.patch, cm = config.channels_per_scale;
  auto weight = [&](Shape shape, std::size_t fan_in) {
    return Tensor::randn(shape, rng, 1.0 / std::sqrt(static_cast<double>(fan_in))).set_requires_grad();
  };
  auto zeros = [](Shape shape) { return Tensor::zeros(shape).set_requires_grad(); };

  TShapeParams p;
  if (config.uses_conv()) {
    for (auto k : config.kernel_sizes) {
      p.conv_weight.push_back(weight({cm, 1, k}, k));
      p.conv_bias.push_back(zeros({cm}));
    }
  }
  if (config.ablation != Ablation::no_conv) {
    p.bn_gamma = Tensor::constant({C}, 1.0).set_requires_grad();
    p.bn_beta = zeros({C});
    p.bn.running_mean = Tensor::zeros({C});
    p.bn.running_var = Tensor::constant({C}, 1.0);
  } else {
    p.input_w = weight({s, C}, s);
    p.input_b = zeros({C});
  }
  p.pos_embedding = Tensor::randn({P, C}, rng, 1.0).set_requires_grad();
  if (config.uses_local()) p.local = make_attention_weights(P, config.heads_local, rng);
  if (config.uses_global()) p.global = make_attention_weights(C, config.heads_global, rng);
  if (config.uses_gate()) {
    p.gate_w = weight({2 * C, C}, 2 * C);
    p.gate_b = zeros({C});
  }
  p.head_w = Tensor::randn({C, s}, rng, 0.1 / std::sqrt(static_cast<double>(C))).set_requires_grad();
  p.head_b = zeros({s});
  return p;
}

Tensor patch_split(const Tensor& window, std::size_t patch) {
  if (patch == 0 || window.size() % patch != 0)
    throw DimensionError("patch_split: window of length " + std::to_string(window.size()) +
                         " is not a multiple of patch length " + std::to_string(patch));
  return reshape(window, {window.size() / patch, patch});
}

Tensor multiscale_conv_forward(const Tensor& patches, TShapeParams& params, const ModelConfig& config, NormMode mode,
                               ForwardTrace* trace) {
  if (!config.uses_conv()) throw ConfigError("multiscale_conv_forward called for ablation " +
                                             std::string(to_string(config.ablation)));
  if (patches.rank() != 2 || patches.dim(1) != config.patch)
    throw DimensionError("multiscale_conv_forward: patches " + shape_string(patches.shape()) +
                         " do not have patch length " + std::to_string(config.patch));
  const auto n = patches.dim(0), s = patches.dim(1);
  const Tensor signal = reshape(patches, {n, 1, s});
  std::vector<Tensor> pooled;
  for (std::size_t m = 0; m < config.kernel_sizes.size(); ++m) {
    const Tensor maps = conv1d(signal, params.conv_weight[m], params.conv_bias[m]);
    pooled.push_back(mean_lastdim(maps));
    if (trace) {
      trace->scale_maps.push_back(maps);
      trace->scale_pooled.push_back(pooled.back());
    }
  }
  const Tensor features = concat_cols(pooled);
  if (trace) trace->features = features;
  return gelu(batchnorm1d(features, params.bn_gamma, params.bn_beta, params.bn, mode));
}

Tensor sliding_window_pool(const Tensor& patches, TShapeParams& params, const ModelConfig& config, NormMode mode,
                           ForwardTrace* trace) {
  if (config.ablation != Ablation::sliding_window)
    throw ConfigError("sliding_window_pool called for ablation " + std::string(to_string(config.ablation)));
  if (patches.rank() != 2 || patches.dim(1) != config.patch)
    throw DimensionError("sliding_window_pool: patches " + shape_string(patches.shape()) +
                         " do not have patch length " + std::to_string(config.patch));
  const auto n = patches.dim(0);
  const Tensor tile = Tensor::constant({1, config.channels_per_scale}, 1.0);
  std::vector<Tensor> pooled;
  for (auto k : config.kernel_sizes) {
    const Tensor smoothed = avg_pool_same(patches, k);
    pooled.push_back(matmul(reshape(mean_lastdim(smoothed), {n, 1}), tile));
    if (trace) trace->scale_pooled.push_back(pooled.back());
  }
  const Tensor features = concat_cols(pooled);
  if (trace) trace->features = features;
  return gelu(batchnorm1d(features, params.bn_gamma, params.bn_beta, params.bn, mode));
}

Tensor add_positional(const Tensor& encoded, const Tensor& pos_embedding) { return add(encoded, pos_embedding); }

Tensor local_attention(const Tensor& positioned, const AttentionWeights& weights, std::vector<RowMatrix>* probs) {
  const Tensor tokens = transpose(positioned);
  return add(transpose(multihead_attention(tokens, tokens, tokens, weights, probs)), positioned);
}

Tensor global_attention(const Tensor& positioned, const AttentionWeights& weights, std::vector<RowMatrix>* probs) {
  return add(multihead_attention(positioned, positioned, positioned, weights, probs), positioned);
}

Fusion gated_fusion(const Tensor& local_out, const Tensor& global_out, const Tensor& gate_w, const Tensor& gate_b) {
  if (local_out.shape() != global_out.shape())
    throw DimensionError("gated_fusion: branch shapes " + shape_string(local_out.shape()) + " and " +
                         shape_string(global_out.shape()) + " differ");
  const std::vector<Tensor> branches{local_out, global_out};
  const Tensor gate = sigmoid(add_bias(matmul(concat_cols(branches), gate_w), gate_b));
  return {add(mul(gate, local_out), mul(one_minus(gate), global_out)), gate};
}

Tensor forward_batch(const Tensor& windows, TShapeParams& params, const ModelConfig& config, NormMode mode,
                     ForwardTrace* trace) {
  if (windows.rank() != 2 || windows.dim(1) != config.window)
    throw DimensionError("forward: windows " + shape_string(windows.shape()) + " do not have length " +
                         std::to_string(config.window));
  const auto batch = windows.dim(0);
  if (trace && batch != 1) throw DimensionError("forward: a trace can only be recorded for a single window");
  const auto P = config.patch_count();
  const auto s = config.patch;

  const Tensor patches = reshape(windows, {batch * P, s});
  if (trace) trace->patches = patches;
  Tensor encoded;
  switch (config.ablation) {
    case Ablation::no_conv: encoded = add_bias(matmul(patches, params.input_w), params.input_b); break;
    case Ablation::sliding_window: encoded = sliding_window_pool(patches, params, config, mode, trace); break;
    default: encoded = multiscale_conv_forward(patches, params, config, mode, trace); break;
  }

  std::vector<Tensor> outputs;
  outputs.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor u = batch == 1 ? encoded : slice_rows(encoded, b * P, P);
    const Tensor v = add_positional(u, params.pos_embedding);
    const Tensor l = config.uses_local()
                         ? local_attention(v, params.local, trace ? &trace->local_attention : nullptr)
                         : v;
    const Tensor g = config.uses_global()
                         ? global_attention(v, params.global, trace ? &trace->global_attention : nullptr)
                         : v;
    Tensor h;
    if (config.uses_gate()) {
      auto fusion = gated_fusion(l, g, params.gate_w, params.gate_b);
      h = fusion.fused;
      if (trace) trace->gate = fusion.gate;
    } else {
      h = config.uses_local() ? l : g;
    }
    const Tensor recon = add_bias(matmul(h, params.head_w), params.head_b);
    if (trace) {
      trace->encoded = u;
      trace->positioned = v;
      trace->local_out = l;
      trace->global_out = g;
      trace->fused = h;
      trace->reconstruction = recon;
    }
    outputs.push_back(reshape(recon, {1, config.window}));
  }
  return batch == 1 ? outputs.front() : concat_rows(outputs);
}

ForwardResult forward(const Tensor& window, TShapeParams& params, const ModelConfig& config, NormMode mode) {
  if (window.size() != config.window)
    throw DimensionError("forward: window of length " + std::to_string(window.size()) + ", expected " +
                         std::to_string(config.window));
  ForwardResult r;
  const Tensor recon = forward_batch(reshape(window, {1, config.window}), params, config, mode, &r.trace);
  r.reconstruction = reshape(recon, {config.window});
  return r;
}

Eigen::VectorXd anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& window,
                              const Eigen::Ref<const Eigen::VectorXd>& reconstruction) {
  if (window.size() != reconstruction.size())
    throw DimensionError("anomaly_score: window length " + std::to_string(window.size()) +
                         " differs from reconstruction length " + std::to_string(reconstruction.size()));
  return (window - reconstruction).array().square().matrix();
}

}  // namespace tshape
