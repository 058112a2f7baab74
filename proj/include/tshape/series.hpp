#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tshape {

/// Univariate series with binary labels. Points before `split_index` form
/// the (normal-only) training region; the rest is the test region.
struct TimeSeries {
  std::vector<double> timestamps;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  std::size_t split_index = 0;

  std::size_t size() const { return values.size(); }
  std::size_t test_size() const { return values.size() - split_index; }
  std::span<const double> train_values() const { return {values.data(), split_index}; }

  /// Throws DimensionError/ParseError if lengths, labels or split are inconsistent.
  void validate() const;
};

/// CSV with header `timestamp,value,label`. An optional leading comment line
/// `# split_index=N` carries the train/test boundary; without it the split is
/// at half the length.
TimeSeries parse_csv(std::string_view text, const std::string& source = "<memory>");
TimeSeries load_csv(const std::filesystem::path& path);
std::string format_csv(const TimeSeries& series);
void write_csv(const TimeSeries& series, const std::filesystem::path& path);

struct Normalization {
  TimeSeries series;
  double mean = 0.0;
  double stddev = 1.0;
};

/// Z-score with mean and (population) standard deviation of the training
/// region only, applied to every point.
Normalization zscore_normalize(const TimeSeries& series);
/// Applies previously fitted statistics.
Normalization apply_normalization(const TimeSeries& series, double mean, double stddev);

struct Window {
  std::size_t end;  // index of the last sample covered
  Eigen::VectorXd values;
};

/// Windows of length T starting at 0, stride, 2·stride, ... that fit inside
/// `values`; a series shorter than T yields one window left-padded with its
/// first value. Tags are offset by `offset`.
std::vector<Window> make_windows(std::span<const double> values, std::size_t window, std::size_t stride,
                                 std::size_t offset = 0);

/// The length-T window ending at t, left-padded with values[0] when t < T-1.
Window window_ending_at(std::span<const double> values, std::size_t t, std::size_t window);

/// One window per t in [first, last), each ending at its t.
std::vector<Window> inference_windows(std::span<const double> values, std::size_t first, std::size_t last,
                                      std::size_t window);

}  // namespace tshape
