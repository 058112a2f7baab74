#pragma once

// Independent reference implementations used as test oracles. They work on
// plain std::vector / Eigen values and never touch the autodiff tape.

#include "tshape/attention.hpp"
#include "tshape/tensor.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using tshape::RowMatrix;
using tshape::Tensor;

// out[o][t] = bias[o] + sum_c sum_j w[o][c][j] * x[c][t + j - pad], zero outside.
inline RowMatrix conv1d(const RowMatrix& x, const std::vector<double>& w, std::size_t c_out, std::size_t k,
                        const std::vector<double>& bias) {
  const auto c_in = static_cast<std::size_t>(x.rows());
  const auto len = static_cast<std::size_t>(x.cols());
  const long pad = static_cast<long>((k - 1) / 2);
  RowMatrix out(static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(len));
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t t = 0; t < len; ++t) {
      double acc = bias[o];
      for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t j = 0; j < k; ++j) {
          const long src = static_cast<long>(t) + static_cast<long>(j) - pad;
          if (src < 0 || src >= static_cast<long>(len)) continue;
          acc += w[(o * c_in + c) * k + j] * x(static_cast<Eigen::Index>(c), src);
        }
      out(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(t)) = acc;
    }
  return out;
}

// Per-head loops with explicit exp/sum softmax.
inline RowMatrix mha(const RowMatrix& q, const RowMatrix& k, const RowMatrix& v, const tshape::AttentionWeights& w,
                     std::vector<RowMatrix>* probs = nullptr) {
  const Eigen::Index L = q.rows(), d = q.cols();
  const Eigen::Index H = static_cast<Eigen::Index>(w.heads), dh = d / H;
  auto project = [](const RowMatrix& x, const Tensor& W, const Tensor& b) {
    const auto Wm = W.matrix();
    const auto bv = b.values();
    RowMatrix out(x.rows(), Wm.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < Wm.cols(); ++j) {
        double acc = bv[j];
        for (Eigen::Index m = 0; m < x.cols(); ++m) acc += x(i, m) * Wm(m, j);
        out(i, j) = acc;
      }
    return out;
  };
  const RowMatrix Q = project(q, w.query_w, w.query_b);
  const RowMatrix K = project(k, w.key_w, w.key_b);
  const RowMatrix V = project(v, w.value_w, w.value_b);
  RowMatrix concat = RowMatrix::Zero(L, d);
  if (probs) probs->clear();
  for (Eigen::Index h = 0; h < H; ++h) {
    RowMatrix A(L, L);
    for (Eigen::Index i = 0; i < L; ++i) {
      std::vector<double> logits(static_cast<std::size_t>(L));
      double mx = -INFINITY;
      for (Eigen::Index j = 0; j < L; ++j) {
        double dot = 0.0;
        for (Eigen::Index m = 0; m < dh; ++m) dot += Q(i, h * dh + m) * K(j, h * dh + m);
        logits[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, logits[static_cast<std::size_t>(j)]);
      }
      double z = 0.0;
      for (auto& l : logits) z += (l = std::exp(l - mx));
      for (Eigen::Index j = 0; j < L; ++j) A(i, j) = logits[static_cast<std::size_t>(j)] / z;
    }
    for (Eigen::Index i = 0; i < L; ++i)
      for (Eigen::Index m = 0; m < dh; ++m) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < L; ++j) acc += A(i, j) * V(j, h * dh + m);
        concat(i, h * dh + m) = acc;
      }
    if (probs) probs->push_back(A);
  }
  return project(concat, w.out_w, w.out_b);
}

// Central difference of f with respect to entry i of `t`, restoring the value.
inline double central_difference(const std::function<double()>& f, Tensor& t, Eigen::Index i, double step) {
  const double saved = t.values()[i];
  t.values()[i] = saved + step;
  const double up = f();
  t.values()[i] = saved - step;
  const double down = f();
  t.values()[i] = saved;
  return (up - down) / (2.0 * step);
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline RowMatrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace oracle
