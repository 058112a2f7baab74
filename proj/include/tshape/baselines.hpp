#pragma once

// Reference detectors: a least-squares autoregressive forecaster and a
// brute-force z-normalized nearest-subsequence distance.

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace tshape {

struct ARParams {
  std::size_t order = 16;
  /// [intercept, a_1, ..., a_p]; prediction x̂_t = c + Σ a_j x_{t-j}.
  Eigen::VectorXd coefficients;

  double predict(std::span<const double> values, std::size_t t) const;
};

/// Lag-p regression by normal equations with ridge 1e-8 on every coefficient.
ARParams ar_fit(std::span<const double> train, std::size_t order = 16);

/// s_t = (x_t - x̂_t)^2 for t in [first, values.size()); lags before index 0
/// read values[0].
std::vector<double> ar_score(std::span<const double> values, const ARParams& params, std::size_t first);

struct SubseqIndex {
  std::size_t length = 32;
  /// One z-normalized training subsequence per row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> subsequences;
};

SubseqIndex subseq_build(std::span<const double> train, std::size_t length = 32);

/// s_t = min distance between the z-normalized subsequence ending at t and
/// any stored training subsequence, for t in [first, values.size()).
std::vector<double> subseq_score(std::span<const double> values, const SubseqIndex& index, std::size_t first);

}  // namespace tshape
