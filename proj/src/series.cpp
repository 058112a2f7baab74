#include "tshape/series.hpp"

#include "tshape/errors.hpp"
#include "tshape/keyvalue.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace tshape {

void TimeSeries::validate() const {
  if (values.size() != labels.size() || values.size() != timestamps.size())
    throw DimensionError("series columns have different lengths");
  if (split_index > values.size())
    throw DimensionError("split index " + std::to_string(split_index) + " exceeds series length " +
                         std::to_string(values.size()));
  for (auto l : labels)
    if (l > 1) throw ParseError("labels must be 0 or 1");
}

TimeSeries parse_csv(std::string_view text, const std::string& source) {
  TimeSeries s;
  std::optional<std::size_t> split_at;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto fail = [&](const std::string& msg) { throw ParseError(source + ":" + std::to_string(line_no) + ": " + msg); };
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      constexpr std::string_view key = "split_index=";
      if (body.starts_with(key)) {
        try {
          const auto v = parse_int(body.substr(key.size()));
          if (v < 0) fail("negative split index");
          split_at = static_cast<std::size_t>(v);
        } catch (const ParseError&) {
          fail("malformed split index");
        }
      }
      continue;
    }
    if (!header_seen) {
      const auto cols = split(line, ',');
      if (cols.size() != 3 || cols[0] != "timestamp" || cols[1] != "value" || cols[2] != "label")
        fail("expected header 'timestamp,value,label'");
      header_seen = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 3) fail("expected 3 columns, got " + std::to_string(cols.size()));
    double ts = 0, value = 0;
    std::int64_t label = 0;
    try {
      ts = parse_double(cols[0]);
      if (cols[1].empty()) fail("missing value");
      value = parse_double(cols[1]);
      label = parse_int(cols[2]);
    } catch (const ParseError& e) {
      fail(e.what());
    }
    if (!std::isfinite(value) || !std::isfinite(ts)) fail("non-finite value");
    if (label != 0 && label != 1) fail("label must be 0 or 1, got " + std::to_string(label));
    if (!s.timestamps.empty() && ts <= s.timestamps.back())
      throw ParseError(source + ":" + std::to_string(line_no) + ": timestamps are not strictly increasing");
    s.timestamps.push_back(ts);
    s.values.push_back(value);
    s.labels.push_back(static_cast<std::uint8_t>(label));
  }
  if (!header_seen) throw ParseError(source + ": missing header 'timestamp,value,label'");
  s.split_index = split_at.value_or(s.values.size() / 2);
  if (s.split_index > s.values.size())
    throw ParseError(source + ": split index " + std::to_string(s.split_index) + " exceeds series length " +
                     std::to_string(s.values.size()));
  return s;
}

TimeSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path.string());
}

std::string format_csv(const TimeSeries& series) {
  series.validate();
  std::string out = "# split_index=" + std::to_string(series.split_index) + "\ntimestamp,value,label\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_double(series.timestamps[i]);
    out += ',';
    out += format_double(series.values[i]);
    out += series.labels[i] ? ",1\n" : ",0\n";
  }
  return out;
}

void write_csv(const TimeSeries& series, const std::filesystem::path& path) {
  const auto text = format_csv(series);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
}

Normalization zscore_normalize(const TimeSeries& series) {
  series.validate();
  const auto train = series.train_values();
  if (train.empty()) throw NumericError("zscore_normalize: empty training region");
  const Eigen::Map<const Eigen::VectorXd> x(train.data(), static_cast<Eigen::Index>(train.size()));
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().mean());
  if (!(sd > 0.0)) throw NumericError("zscore_normalize: training region has zero standard deviation");
  return apply_normalization(series, mean, sd);
}

Normalization apply_normalization(const TimeSeries& series, double mean, double stddev) {
  if (!(stddev > 0.0) || !std::isfinite(stddev) || !std::isfinite(mean))
    throw NumericError("normalization needs a finite mean and a positive standard deviation");
  Normalization n{series, mean, stddev};
  for (auto& v : n.series.values) v = (v - mean) / stddev;
  return n;
}

Window window_ending_at(std::span<const double> values, std::size_t t, std::size_t window) {
  if (t >= values.size()) throw DimensionError("window end " + std::to_string(t) + " is past the series");
  Window w{t, Eigen::VectorXd(static_cast<Eigen::Index>(window))};
  for (std::size_t j = 0; j < window; ++j) {
    // position j holds x[t - (window - 1) + j], clamped to x[0]
    const std::size_t back = window - 1 - j;
    w.values[static_cast<Eigen::Index>(j)] = back > t ? values[0] : values[t - back];
  }
  return w;
}

std::vector<Window> make_windows(std::span<const double> values, std::size_t window, std::size_t stride,
                                 std::size_t offset) {
  if (stride == 0) throw ConfigError("window stride must be at least 1");
  if (values.empty()) throw DimensionError("make_windows: empty series");
  std::vector<Window> out;
  if (values.size() < window) {
    auto w = window_ending_at(values, values.size() - 1, window);
    w.end += offset;
    out.push_back(std::move(w));
    return out;
  }
  for (std::size_t start = 0; start + window <= values.size(); start += stride) {
    Window w{offset + start + window - 1, Eigen::VectorXd(static_cast<Eigen::Index>(window))};
    for (std::size_t j = 0; j < window; ++j) w.values[static_cast<Eigen::Index>(j)] = values[start + j];
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Window> inference_windows(std::span<const double> values, std::size_t first, std::size_t last,
                                      std::size_t window) {
  std::vector<Window> out;
  out.reserve(last > first ? last - first : 0);
  for (std::size_t t = first; t < last; ++t) out.push_back(window_ending_at(values, t, window));
  return out;
}

}  // namespace tshape
