#include "tshape/training.hpp"

#include "tshape/errors.hpp"
#include "tshape/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tshape {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie in (0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be non-negative");
}

Tensor stack_windows(std::span<const Window> windows, std::span<const std::size_t> order) {
  const std::size_t b = order.empty() ? windows.size() : order.size();
  const auto len = static_cast<std::size_t>(windows.front().values.size());
  Eigen::VectorXd data(static_cast<Eigen::Index>(b * len));
  for (std::size_t i = 0; i < b; ++i) {
    const auto& w = windows[order.empty() ? i : order[i]];
    data.segment(static_cast<Eigen::Index>(i * len), static_cast<Eigen::Index>(len)) = w.values;
  }
  return Tensor({b, len}, std::move(data));
}

double evaluate_loss(std::span<const Window> windows, TShapeParams& params, const ModelConfig& config,
                     std::size_t batch_size) {
  NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const auto chunk = windows.subspan(start, std::min(batch_size, windows.size() - start));
    const Tensor x = stack_windows(chunk);
    const Tensor recon = forward_batch(x, params, config, NormMode::eval);
    total += mse_loss(recon, x).item() * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(windows.size());
}

TrainResult train(const TimeSeries& series, const ModelConfig& model_config, const TrainConfig& train_config,
                  const EpochCallback& on_epoch) {
  series.validate();
  model_config.validate();
  train_config.validate();
  const std::size_t split = series.split_index;
  const std::size_t T = model_config.window;
  if (split < T)
    throw ConfigError("training region has " + std::to_string(split) + " points, fewer than the window length " +
                      std::to_string(T));
  const auto val_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(train_config.validation_fraction * static_cast<double>(split))));
  const std::size_t fit_end = split - val_len;
  if (fit_end == 0) throw ConfigError("validation slice leaves no fitting data");
  const std::size_t stride = train_config.stride ? train_config.stride : model_config.patch;

  const std::span<const double> values(series.values);
  // Each epoch shifts every grid window by its own offset in [0, stride) so
  // window ends cover all phases and every batch mixes them.
  const auto grid = make_windows(values.subspan(0, fit_end), T, stride, 0);
  const auto val = make_windows(values.subspan(fit_end, val_len), T, 1, fit_end);
  std::vector<Window> fit = grid;

  TrainResult result;
  result.fit_end = fit_end;
  result.fit_windows = fit.size();
  result.val_windows = val.size();

  TShapeParams params = init_params(model_config, train_config.seed);
  auto trainable = params.learnable_tensors();
  AdamState adam;
  adam.lr = train_config.lr;
  adam.beta1 = train_config.adam_beta1;
  adam.beta2 = train_config.adam_beta2;
  adam.eps = train_config.adam_eps;
  std::mt19937_64 rng(train_config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  double patience_ref = best;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
    if (fit_end > T) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::size_t room = std::min(stride - 1, fit_end - 1 - grid[i].end);
        const std::size_t shift = std::uniform_int_distribution<std::size_t>(0, room)(rng);
        if (shift > 0) fit[i] = window_ending_at(values, grid[i].end + shift, T);
        else fit[i] = grid[i];
      }
      std::iota(order.begin(), order.end(), 0);
    }
    std::shuffle(order.begin(), order.end(), rng);
    // Batches of batch_size; a trailing single window joins the previous batch
    // so batch norm always sees at least two windows when it can.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size)
      batches.emplace_back(start, std::min(order.size(), start + train_config.batch_size));
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const std::span<const std::size_t> idx(order.data() + batches[b].first, batches[b].second - batches[b].first);
      for (auto i : idx) {
        result.max_batch_index = std::max(result.max_batch_index, fit[i].end);
        if (fit[i].end >= fit_end) throw std::logic_error("training batch reached past the fitting slice");
      }
      const Tensor x = stack_windows(fit, idx);
      const Tensor recon = forward_batch(x, params, model_config, NormMode::train);
      const Tensor loss = mse_loss(recon, x);
      const double l = loss.item();
      if (!std::isfinite(l))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1));
      backward(loss);
      adam_step(trainable, adam);
      zero_grad(trainable);
      epoch_loss += l * static_cast<double>(idx.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.val_loss = evaluate_loss(val, params, model_config);
    if (!std::isfinite(rec.val_loss))
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.params = params.clone();
      result.best_epoch = epoch;
    }
    rec.best_val_loss = best;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < patience_ref - train_config.min_delta) {
      patience_ref = rec.val_loss;
      stale = 0;
    } else if (++stale >= train_config.early_stop_patience) {
      break;
    }
  }
  result.best_val_loss = best;
  return result;
}

}  // namespace tshape
