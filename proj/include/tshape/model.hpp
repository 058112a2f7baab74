#pragma once

// Patch-based reconstruction network for univariate windows:
//
//   window[T] -> patches[P×s] -> multi-scale conv + GAP -> BN -> GELU -> U[P×C]
//   V = U + E
//   L~ = MHA_local(Vᵀ)ᵀ + V      (channels as tokens, patch axis as embedding)
//   G~ = MHA_global(V) + V       (patches as tokens)
//   g  = sigmoid([L~; G~] Wg + bg),  H = g ⊙ L~ + (1 - g) ⊙ G~
//   reconstruction = H · W_head + b_head  ->  [P×s] -> [T]

#include "tshape/attention.hpp"
#include "tshape/ops.hpp"
#include "tshape/tensor.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tshape {

enum class Ablation { full, no_local, no_global, no_conv, sliding_window };

std::string_view to_string(Ablation a);
Ablation parse_ablation(std::string_view name);

struct ModelConfig {
  std::size_t window = 256;
  std::size_t patch = 16;
  std::vector<std::size_t> kernel_sizes{3, 5, 7};
  std::size_t channels_per_scale = 16;
  std::size_t heads_local = 4;
  std::size_t heads_global = 4;
  Ablation ablation = Ablation::full;

  std::size_t patch_count() const { return window / patch; }
  std::size_t feature_dim() const { return kernel_sizes.size() * channels_per_scale; }
  bool uses_conv() const { return ablation != Ablation::no_conv && ablation != Ablation::sliding_window; }
  bool uses_local() const { return ablation != Ablation::no_local; }
  bool uses_global() const { return ablation != Ablation::no_global; }
  bool uses_gate() const { return uses_local() && uses_global(); }

  /// Throws ConfigError on any violated structural constraint.
  void validate() const;
};

struct TShapeParams {
  // Multi-scale convolution, one entry per kernel size.
  std::vector<Tensor> conv_weight;  // [Cm×1×k]
  std::vector<Tensor> conv_bias;    // [Cm]
  // Batch norm over patch features (conv and sliding-window variants).
  Tensor bn_gamma, bn_beta;
  BatchNormStats bn;
  // Raw-patch projection used when convolution is ablated.
  Tensor input_w, input_b;  // [s×C], [C]
  Tensor pos_embedding;     // E [P×C]
  AttentionWeights local;   // model dimension P
  AttentionWeights global;  // model dimension C
  Tensor gate_w, gate_b;    // [2C×C], [C]
  Tensor head_w, head_b;    // [C×s], [s]

  /// Every learnable tensor with its path, in a stable order.
  std::vector<std::pair<std::string, Tensor>> learnable() const;
  /// Non-learnable state (batch-norm running statistics).
  std::vector<std::pair<std::string, Tensor>> buffers() const;
  std::vector<Tensor> learnable_tensors() const;

  /// Deep copy; the result shares no storage with *this.
  TShapeParams clone() const;
};

/// Expected parameter and buffer shapes for a configuration, keyed by path.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& config);

/// Projection weights ~ N(0, 1/fan_in) except the output head, N(0, 0.01/C);
/// E ~ N(0, 1), biases zero, BN gamma one.
TShapeParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardTrace {
  Tensor patches;                         // [P×s]
  std::vector<Tensor> scale_maps;         // per kernel size: h [P×Cm×s]
  std::vector<Tensor> scale_pooled;       // per kernel size: z^(k) [P×Cm]
  Tensor features;                        // z before normalization [P×C]
  Tensor encoded;                         // U [P×C]
  Tensor positioned;                      // V [P×C]
  Tensor local_out;                       // L~ [P×C]
  Tensor global_out;                      // G~ [P×C]
  Tensor gate;                            // g [P×C] (undefined under single-branch ablations)
  Tensor fused;                           // H [P×C]
  std::vector<RowMatrix> local_attention;   // per head [C×C]
  std::vector<RowMatrix> global_attention;  // per head [P×P]
  Tensor reconstruction;                  // [P×s]
};

/// window[T] -> [P×s], row i = x[i·s, (i+1)·s).
Tensor patch_split(const Tensor& window, std::size_t patch);

/// patches[N×s] -> U[N×C]. Batch norm treats the N patches as the batch.
Tensor multiscale_conv_forward(const Tensor& patches, TShapeParams& params, const ModelConfig& config, NormMode mode,
                               ForwardTrace* trace = nullptr);

/// Parameter-free stand-in for the convolution: per kernel size, a
/// same-length moving average, pooled over the patch and tiled to Cm channels.
Tensor sliding_window_pool(const Tensor& patches, TShapeParams& params, const ModelConfig& config, NormMode mode,
                           ForwardTrace* trace = nullptr);

Tensor add_positional(const Tensor& encoded, const Tensor& pos_embedding);

/// L~ = MHA(Vᵀ, Vᵀ, Vᵀ)ᵀ + V over the C channel tokens.
Tensor local_attention(const Tensor& positioned, const AttentionWeights& weights,
                       std::vector<RowMatrix>* probs = nullptr);

/// G~ = MHA(V, V, V) + V over the P patch tokens.
Tensor global_attention(const Tensor& positioned, const AttentionWeights& weights,
                        std::vector<RowMatrix>* probs = nullptr);

struct Fusion {
  Tensor fused;
  Tensor gate;
};

Fusion gated_fusion(const Tensor& local_out, const Tensor& global_out, const Tensor& gate_w, const Tensor& gate_b);

/// windows[B×T] -> reconstructions[B×T]. `trace` requires B == 1.
Tensor forward_batch(const Tensor& windows, TShapeParams& params, const ModelConfig& config, NormMode mode,
                     ForwardTrace* trace = nullptr);

struct ForwardResult {
  Tensor reconstruction;  // [T]
  ForwardTrace trace;
};

ForwardResult forward(const Tensor& window, TShapeParams& params, const ModelConfig& config,
                      NormMode mode = NormMode::eval);

/// Pointwise squared reconstruction error.
Eigen::VectorXd anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& window,
                              const Eigen::Ref<const Eigen::VectorXd>& reconstruction);

}  // namespace tshape
