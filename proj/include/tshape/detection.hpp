#pragma once

#include "tshape/model.hpp"
#include "tshape/series.hpp"

#include <filesystem>
#include <vector>

namespace tshape {

/// Per-point anomaly scores for the test region of a series.
struct ScoreSeries {
  std::vector<double> scores;
  std::size_t first_index = 0;  // series index of scores[0] (the split)
  std::size_t valid_from = 0;   // first series index whose window needs no padding

  std::size_t size() const { return scores.size(); }
};

/// Scores each test index t by the squared reconstruction error at the last
/// position of the window ending at t. `series` must already be normalized.
ScoreSeries score_series(TShapeParams& params, const ModelConfig& config, const TimeSeries& series,
                         std::size_t batch_size = 64);

/// Wraps baseline output for the test region.
ScoreSeries make_score_series(std::vector<double> scores, std::size_t first_index, std::size_t window);

/// `index,score` CSV with absolute series indices.
void write_scores_csv(const ScoreSeries& scores, const std::filesystem::path& path);
ScoreSeries load_scores_csv(const std::filesystem::path& path);

}  // namespace tshape
