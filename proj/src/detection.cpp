#include "tshape/detection.hpp"

#include "tshape/errors.hpp"
#include "tshape/keyvalue.hpp"
#include "tshape/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tshape {

ScoreSeries score_series(TShapeParams& params, const ModelConfig& config, const TimeSeries& series,
                         std::size_t batch_size) {
  series.validate();
  config.validate();
  if (series.test_size() == 0) throw DimensionError("score_series: empty test region");
  for (const auto& [path, t] : params.learnable())
    if (!t.values().allFinite()) throw NumericError("parameter " + path + " contains non-finite values");
  for (const auto& [path, t] : params.buffers())
    if (!t.values().allFinite()) throw NumericError("buffer " + path + " contains non-finite values");

  NoGradGuard no_grad;
  const std::span<const double> values(series.values);
  const std::size_t T = config.window;
  ScoreSeries out = make_score_series({}, series.split_index, T);
  out.scores.reserve(series.test_size());
  for (std::size_t t0 = series.split_index; t0 < series.size(); t0 += batch_size) {
    const std::size_t t1 = std::min(series.size(), t0 + batch_size);
    const auto windows = inference_windows(values, t0, t1, T);
    const Tensor recon = forward_batch(stack_windows(windows), params, config, NormMode::eval);
    const auto r = recon.matrix();
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const double e = values[t0 + i] - r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(T - 1));
      if (!std::isfinite(e)) throw NumericError("non-finite score at index " + std::to_string(t0 + i));
      out.scores.push_back(e * e);
    }
  }
  return out;
}

ScoreSeries make_score_series(std::vector<double> scores, std::size_t first_index, std::size_t window) {
  ScoreSeries s;
  s.scores = std::move(scores);
  s.first_index = first_index;
  s.valid_from = std::max(first_index, window > 0 ? window - 1 : 0);
  return s;
}

void write_scores_csv(const ScoreSeries& scores, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << "index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    out << scores.first_index + i << ',' << format_double(scores.scores[i]) << '\n';
}

ScoreSeries load_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  ScoreSeries s;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (!header) {
      if (body != "index,score") throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected header 'index,score'");
      header = true;
      continue;
    }
    const auto cols = split(body, ',');
    if (cols.size() != 2) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
    try {
      const auto index = static_cast<std::size_t>(parse_int(cols[0]));
      if (s.scores.empty()) s.first_index = index;
      else if (index != s.first_index + s.scores.size())
        throw ParseError("indices must be consecutive");
      s.scores.push_back(parse_double(cols[1]));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw ParseError(path.string() + ": missing header 'index,score'");
  s.valid_from = s.first_index;
  return s;
}

}  // namespace tshape
