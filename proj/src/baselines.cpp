#include "tshape/baselines.hpp"

#include "tshape/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tshape {

double ARParams::predict(std::span<const double> values, std::size_t t) const {
  double pred = coefficients[0];
  for (std::size_t j = 1; j <= order; ++j) pred += coefficients[static_cast<Eigen::Index>(j)] * values[t >= j ? t - j : 0];
  return pred;
}

ARParams ar_fit(std::span<const double> train, std::size_t order) {
  if (order == 0) throw ConfigError("AR order must be positive");
  if (train.size() <= 2 * order)
    throw ConfigError("AR(" + std::to_string(order) + ") needs more than " + std::to_string(2 * order) +
                      " training points, got " + std::to_string(train.size()));
  const auto rows = static_cast<Eigen::Index>(train.size() - order);
  const auto cols = static_cast<Eigen::Index>(order + 1);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = static_cast<std::size_t>(r) + order;
    design(r, 0) = 1.0;
    for (std::size_t j = 1; j <= order; ++j) design(r, static_cast<Eigen::Index>(j)) = train[t - j];
    target[r] = train[t];
  }
  Eigen::MatrixXd gram = design.transpose() * design;
  gram.diagonal().array() += 1e-8;
  ARParams p;
  p.order = order;
  p.coefficients = gram.ldlt().solve(design.transpose() * target);
  if (!p.coefficients.allFinite()) throw NumericError("AR normal equations produced non-finite coefficients");
  return p;
}

std::vector<double> ar_score(std::span<const double> values, const ARParams& params, std::size_t first) {
  std::vector<double> out;
  out.reserve(values.size() > first ? values.size() - first : 0);
  for (std::size_t t = first; t < values.size(); ++t) {
    const double e = values[t] - params.predict(values, t);
    out.push_back(e * e);
  }
  return out;
}

namespace {

// Z-normalizes in place; flat subsequences are only centered.
void znormalize(Eigen::Ref<Eigen::RowVectorXd> x) {
  const double m = x.mean();
  x.array() -= m;
  const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  if (sd > 1e-8) x /= sd;
}

}  // namespace

SubseqIndex subseq_build(std::span<const double> train, std::size_t length) {
  if (length < 2) throw ConfigError("subsequence length must be at least 2");
  if (length > train.size())
    throw ConfigError("subsequence length " + std::to_string(length) + " exceeds training length " +
                      std::to_string(train.size()));
  SubseqIndex index;
  index.length = length;
  const auto count = static_cast<Eigen::Index>(train.size() - length + 1);
  index.subsequences.resize(count, static_cast<Eigen::Index>(length));
  for (Eigen::Index i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < length; ++j)
      index.subsequences(i, static_cast<Eigen::Index>(j)) = train[static_cast<std::size_t>(i) + j];
    znormalize(index.subsequences.row(i));
  }
  return index;
}

std::vector<double> subseq_score(std::span<const double> values, const SubseqIndex& index, std::size_t first) {
  const std::size_t len = index.length;
  if (len > values.size())
    throw ConfigError("subsequence length " + std::to_string(len) + " exceeds series length " +
                      std::to_string(values.size()));
  const std::size_t n = values.size() > first ? values.size() - first : 0;
  std::vector<double> out(n);
  const Eigen::VectorXd train_norms = index.subsequences.rowwise().squaredNorm();
  constexpr std::size_t kChunk = 256;
  for (std::size_t c0 = 0; c0 < n; c0 += kChunk) {
    const std::size_t rows = std::min(kChunk, n - c0);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> query(rows, len);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t t = first + c0 + r;
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t back = len - 1 - j;
        query(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = back > t ? values[0] : values[t - back];
      }
      znormalize(query.row(static_cast<Eigen::Index>(r)));
    }
    const Eigen::MatrixXd cross = query * index.subsequences.transpose();
    for (std::size_t r = 0; r < rows; ++r) {
      const double qn = query.row(static_cast<Eigen::Index>(r)).squaredNorm();
      const double best =
          ((train_norms.transpose().array() - 2.0 * cross.row(static_cast<Eigen::Index>(r)).array()) + qn).minCoeff();
      out[c0 + r] = std::sqrt(std::max(0.0, best));
    }
  }
  return out;
}

}  // namespace tshape
