#pragma once

#include "tshape/model.hpp"
#include "tshape/series.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace tshape {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  /// Training window stride; 0 means the patch length.
  std::size_t stride = 0;
  std::size_t early_stop_patience = 5;
  /// Tail fraction of the training region held out for validation.
  double validation_fraction = 0.2;
  /// Minimum validation improvement that resets the patience counter.
  double min_delta = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double best_val_loss = 0.0;  // best validation loss so far
};

struct TrainResult {
  TShapeParams params;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t fit_windows = 0;
  std::size_t val_windows = 0;
  std::size_t fit_end = 0;         // fitting slice is [0, fit_end)
  std::size_t max_batch_index = 0; // largest series index that entered a training batch
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Fits a fresh model on the training region of an already-normalized
/// series by minimizing the mean squared reconstruction error with Adam.
TrainResult train(const TimeSeries& series, const ModelConfig& model_config, const TrainConfig& train_config,
                  const EpochCallback& on_epoch = {});

/// Mean reconstruction MSE over windows, batch norm in eval mode.
double evaluate_loss(std::span<const Window> windows, TShapeParams& params, const ModelConfig& config,
                     std::size_t batch_size = 64);

/// Stacks window values into a [B×T] tensor.
Tensor stack_windows(std::span<const Window> windows, std::span<const std::size_t> order = {});

}  // namespace tshape
