#include "tshape/ops.hpp"

#include "tshape/errors.hpp"

#include <cmath>

namespace tshape {

using detail::make_result;
using detail::needs_grad;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
}

ConstMatrixMap grad_view(const TensorImpl& out) {
  const auto cols = static_cast<Eigen::Index>(out.shape.back());
  return ConstMatrixMap(out.grad.data(), out.grad.size() / cols, cols);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return make_result(a.shape(), a.values() + b.values(), {a, b}, [a, b](const TensorImpl& out) {
    if (needs_grad(a)) a.impl()->accumulate(out.grad);
    if (needs_grad(b)) b.impl()->accumulate(out.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return make_result(a.shape(), a.values() - b.values(), {a, b}, [a, b](const TensorImpl& out) {
    if (needs_grad(a)) a.impl()->accumulate(out.grad);
    if (needs_grad(b)) b.impl()->accumulate(-out.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return make_result(a.shape(), a.values().cwiseProduct(b.values()), {a, b}, [a, b](const TensorImpl& out) {
    if (needs_grad(a)) a.impl()->accumulate(out.grad.cwiseProduct(b.values()));
    if (needs_grad(b)) b.impl()->accumulate(out.grad.cwiseProduct(a.values()));
  });
}

Tensor scale(const Tensor& a, double factor) {
  return make_result(a.shape(), a.values() * factor, {a}, [a, factor](const TensorImpl& out) {
    a.impl()->accumulate(out.grad * factor);
  });
}

Tensor one_minus(const Tensor& a) {
  return make_result(a.shape(), (1.0 - a.values().array()).matrix(), {a},
                     [a](const TensorImpl& out) { a.impl()->accumulate(-out.grad); });
}

Tensor square(const Tensor& a) {
  return make_result(a.shape(), a.values().array().square().matrix(), {a}, [a](const TensorImpl& out) {
    a.impl()->accumulate(2.0 * out.grad.cwiseProduct(a.values()));
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank2(a, "add_bias");
  if (bias.size() != a.dim(1))
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match columns of " +
                         shape_string(a.shape()));
  RowMatrix r = a.matrix().rowwise() + bias.matrix().row(0);
  Eigen::VectorXd data = Eigen::Map<Eigen::VectorXd>(r.data(), r.size());
  return make_result(a.shape(), std::move(data), {a, bias}, [a, bias](const TensorImpl& out) {
    if (needs_grad(a)) a.impl()->accumulate(out.grad);
    if (needs_grad(bias)) bias.impl()->accumulate(grad_view(out).colwise().sum().transpose());
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.dim(1) != b.dim(0))
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  const auto m = a.dim(0), n = b.dim(1);
  Eigen::VectorXd data(static_cast<Eigen::Index>(m * n));
  MatrixMap(data.data(), m, n).noalias() = a.matrix() * b.matrix();
  return make_result({m, n}, std::move(data), {a, b}, [a, b](const TensorImpl& out) {
    const auto g = grad_view(out);
    if (needs_grad(a)) {
      auto& ga = a.impl()->grad_buffer();
      MatrixMap(ga.data(), a.dim(0), a.dim(1)).noalias() += g * b.matrix().transpose();
    }
    if (needs_grad(b)) {
      auto& gb = b.impl()->grad_buffer();
      MatrixMap(gb.data(), b.dim(0), b.dim(1)).noalias() += a.matrix().transpose() * g;
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const auto m = a.dim(0), n = a.dim(1);
  Eigen::VectorXd data(a.values().size());
  MatrixMap(data.data(), n, m) = a.matrix().transpose();
  return make_result({n, m}, std::move(data), {a}, [a, m, n](const TensorImpl& out) {
    auto& ga = a.impl()->grad_buffer();
    MatrixMap(ga.data(), m, n) += ConstMatrixMap(out.grad.data(), n, m).transpose();
  });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape_size(shape) != a.size())
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  return make_result(shape, a.values(), {a}, [a](const TensorImpl& out) { a.impl()->accumulate(out.grad); });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank2(a, "slice_rows");
  if (count == 0 || begin + count > a.dim(0))
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_string(a.shape()));
  const auto cols = a.dim(1);
  const auto offset = static_cast<Eigen::Index>(begin * cols);
  const auto len = static_cast<Eigen::Index>(count * cols);
  return make_result({count, cols}, a.values().segment(offset, len), {a},
                     [a, offset, len](const TensorImpl& out) {
                       a.impl()->grad_buffer().segment(offset, len) += out.grad;
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank2(a, "slice_cols");
  if (count == 0 || begin + count > a.dim(1))
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_string(a.shape()));
  const auto rows = a.dim(0);
  Eigen::VectorXd data(static_cast<Eigen::Index>(rows * count));
  MatrixMap(data.data(), rows, count) = a.matrix().middleCols(begin, count);
  return make_result({rows, count}, std::move(data), {a}, [a, begin, count](const TensorImpl& out) {
    auto& ga = a.impl()->grad_buffer();
    MatrixMap(ga.data(), a.dim(0), a.dim(1)).middleCols(begin, count) += grad_view(out);
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  std::size_t rows = 0;
  const auto cols = parts[0].dim(1);
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.dim(1) != cols)
      throw DimensionError("concat_rows: column count " + std::to_string(p.dim(1)) + " differs from " +
                           std::to_string(cols));
    rows += p.dim(0);
  }
  Eigen::VectorXd data(static_cast<Eigen::Index>(rows * cols));
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    data.segment(offset, p.values().size()) = p.values();
    offset += p.values().size();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result({rows, cols}, std::move(data), inputs, [inputs](const TensorImpl& out) {
    Eigen::Index off = 0;
    for (const auto& p : inputs) {
      const auto n = p.values().size();
      if (needs_grad(p)) p.impl()->accumulate(out.grad.segment(off, n));
      off += n;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const auto rows = parts[0].dim(0);
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.dim(0) != rows)
      throw DimensionError("concat_cols: row count " + std::to_string(p.dim(0)) + " differs from " +
                           std::to_string(rows));
    cols += p.dim(1);
  }
  Eigen::VectorXd data(static_cast<Eigen::Index>(rows * cols));
  MatrixMap dst(data.data(), rows, cols);
  std::size_t c = 0;
  for (const auto& p : parts) {
    dst.middleCols(c, p.dim(1)) = p.matrix();
    c += p.dim(1);
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result({rows, cols}, std::move(data), inputs, [inputs](const TensorImpl& out) {
    const auto g = grad_view(out);
    std::size_t col = 0;
    for (const auto& p : inputs) {
      if (needs_grad(p)) {
        auto& gp = p.impl()->grad_buffer();
        MatrixMap(gp.data(), p.dim(0), p.dim(1)) += g.middleCols(col, p.dim(1));
      }
      col += p.dim(1);
    }
  });
}

Tensor softmax_lastdim(const Tensor& x) {
  const auto n = static_cast<Eigen::Index>(x.shape().back());
  const auto rows = x.values().size() / n;
  if (!x.values().allFinite()) throw NumericError("softmax_lastdim: non-finite input");
  Eigen::VectorXd data(x.values().size());
  ConstMatrixMap in(x.values().data(), rows, n);
  MatrixMap y(data.data(), rows, n);
  for (Eigen::Index r = 0; r < rows; ++r) {
    y.row(r) = (in.row(r).array() - in.row(r).maxCoeff()).exp();
    y.row(r) /= y.row(r).sum();
  }
  return make_result(x.shape(), std::move(data), {x}, [x, rows, n](const TensorImpl& out) {
    ConstMatrixMap yv(out.data.data(), rows, n);
    ConstMatrixMap g(out.grad.data(), rows, n);
    auto& gx = x.impl()->grad_buffer();
    MatrixMap dx(gx.data(), rows, n);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double dot = g.row(r).dot(yv.row(r));
      dx.row(r).array() += yv.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Tensor gelu(const Tensor& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  const auto& v = x.values();
  Eigen::VectorXd data(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double xi = v[i];
    data[i] = 0.5 * xi * (1.0 + std::tanh(kC * (xi + kA * xi * xi * xi)));
  }
  return make_result(x.shape(), std::move(data), {x}, [x](const TensorImpl& out) {
    const auto& xv = x.values();
    Eigen::VectorXd d(xv.size());
    for (Eigen::Index i = 0; i < xv.size(); ++i) {
      const double xi = xv[i];
      const double t = std::tanh(kC * (xi + kA * xi * xi * xi));
      d[i] = 0.5 * (1.0 + t) + 0.5 * xi * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * xi * xi);
    }
    x.impl()->accumulate(out.grad.cwiseProduct(d));
  });
}

Tensor sigmoid(const Tensor& x) {
  const auto& v = x.values();
  Eigen::VectorXd data(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double xi = v[i];
    if (xi >= 0) {
      data[i] = 1.0 / (1.0 + std::exp(-xi));
    } else {
      const double e = std::exp(xi);
      data[i] = e / (1.0 + e);
    }
  }
  return make_result(x.shape(), std::move(data), {x}, [x](const TensorImpl& out) {
    const auto& y = out.data.array();
    x.impl()->accumulate((out.grad.array() * y * (1.0 - y)).matrix());
  });
}

Tensor sum(const Tensor& x) {
  return make_result({1}, Eigen::VectorXd::Constant(1, x.values().sum()), {x}, [x](const TensorImpl& out) {
    x.impl()->grad_buffer().array() += out.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.size());
  return make_result({1}, Eigen::VectorXd::Constant(1, x.values().mean()), {x}, [x, n](const TensorImpl& out) {
    x.impl()->grad_buffer().array() += out.grad[0] / n;
  });
}

Tensor mse_loss(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size())
    throw DimensionError("mse_loss: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  const double n = static_cast<double>(a.size());
  Eigen::VectorXd diff = a.values() - b.values();
  const double loss = diff.squaredNorm() / n;
  return make_result({1}, Eigen::VectorXd::Constant(1, loss), {a, b}, [a, b, diff, n](const TensorImpl& out) {
    const double s = 2.0 * out.grad[0] / n;
    if (needs_grad(a)) a.impl()->accumulate(s * diff);
    if (needs_grad(b)) b.impl()->accumulate(-s * diff);
  });
}

Tensor mean_lastdim(const Tensor& x) {
  const auto n = static_cast<Eigen::Index>(x.shape().back());
  const auto rows = x.values().size() / n;
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  if (shape.empty()) shape = {1};
  Eigen::VectorXd data = ConstMatrixMap(x.values().data(), rows, n).rowwise().mean();
  return make_result(std::move(shape), std::move(data), {x}, [x, rows, n](const TensorImpl& out) {
    auto& gx = x.impl()->grad_buffer();
    MatrixMap(gx.data(), rows, n).colwise() += out.grad / static_cast<double>(n);
  });
}

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  if (x.rank() != 2 && x.rank() != 3)
    throw DimensionError("conv1d: input must be [C_in×L] or [N×C_in×L], got " + shape_string(x.shape()));
  if (kernels.rank() != 3) throw DimensionError("conv1d: kernels must be [C_out×C_in×k], got " + shape_string(kernels.shape()));
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t cin = x.dim(batched ? 1 : 0);
  const std::size_t len = x.dim(batched ? 2 : 1);
  const std::size_t cout = kernels.dim(0);
  const std::size_t k = kernels.dim(2);
  if (kernels.dim(1) != cin)
    throw DimensionError("conv1d: kernels " + shape_string(kernels.shape()) + " expect " +
                         std::to_string(kernels.dim(1)) + " input channels, input " + shape_string(x.shape()) +
                         " has " + std::to_string(cin));
  if (bias.size() != cout)
    throw DimensionError("conv1d: bias " + shape_string(bias.shape()) + " does not match " + std::to_string(cout) +
                         " output channels");
  if (k % 2 == 0) throw ConfigError("conv1d: kernel size must be odd, got " + std::to_string(k));
  const std::size_t pad = (k - 1) / 2;
  if (k > len + 2 * pad)
    throw ConfigError("conv1d: kernel size " + std::to_string(k) + " exceeds padded length " +
                      std::to_string(len + 2 * pad));

  const double* xv = x.values().data();
  const double* wv = kernels.values().data();
  const double* bv = bias.values().data();
  Eigen::VectorXd data(static_cast<Eigen::Index>(batch * cout * len));
  double* yv = data.data();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < cout; ++o) {
      double* yrow = yv + (n * cout + o) * len;
      for (std::size_t t = 0; t < len; ++t) yrow[t] = bv[o];
      for (std::size_t c = 0; c < cin; ++c) {
        const double* xrow = xv + (n * cin + c) * len;
        const double* w = wv + (o * cin + c) * k;
        for (std::size_t j = 0; j < k; ++j) {
          // y[t] += w[j] * x[t + j - pad] over in-range t + j - pad
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad);
          const std::size_t reach = static_cast<std::size_t>(shift < 0 ? -shift : shift);
          if (reach >= len) continue;
          const std::size_t t0 = shift < 0 ? reach : 0;
          const std::size_t t1 = shift > 0 ? len - reach : len;
          for (std::size_t t = t0; t < t1; ++t) yrow[t] += w[j] * xrow[static_cast<std::ptrdiff_t>(t) + shift];
        }
      }
    }
  }
  Shape shape = batched ? Shape{batch, cout, len} : Shape{cout, len};
  return make_result(std::move(shape), std::move(data), {x, kernels, bias},
                     [x, kernels, bias, batch, cin, cout, len, k, pad](const TensorImpl& out) {
                       const double* g = out.grad.data();
                       const double* xv = x.values().data();
                       const double* wv = kernels.values().data();
                       double* gx = needs_grad(x) ? x.impl()->grad_buffer().data() : nullptr;
                       double* gw = needs_grad(kernels) ? kernels.impl()->grad_buffer().data() : nullptr;
                       double* gb = needs_grad(bias) ? bias.impl()->grad_buffer().data() : nullptr;
                       for (std::size_t n = 0; n < batch; ++n) {
                         for (std::size_t o = 0; o < cout; ++o) {
                           const double* grow = g + (n * cout + o) * len;
                           if (gb)
                             for (std::size_t t = 0; t < len; ++t) gb[o] += grow[t];
                           for (std::size_t c = 0; c < cin; ++c) {
                             const std::size_t xoff = (n * cin + c) * len;
                             const std::size_t woff = (o * cin + c) * k;
                             for (std::size_t j = 0; j < k; ++j) {
                               const std::ptrdiff_t shift =
                                   static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad);
                               const std::size_t reach = static_cast<std::size_t>(shift < 0 ? -shift : shift);
                               if (reach >= len) continue;
                               const std::size_t t0 = shift < 0 ? reach : 0;
                               const std::size_t t1 = shift > 0 ? len - reach : len;
                               double acc = 0.0;
                               for (std::size_t t = t0; t < t1; ++t) {
                                 const std::size_t xi = xoff + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(t) + shift);
                                 acc += xv[xi] * grow[t];
                                 if (gx) gx[xi] += wv[woff + j] * grow[t];
                               }
                               if (gw) gw[woff + j] += acc;
                             }
                           }
                         }
                       }
                     });
}

Tensor avg_pool_same(const Tensor& x, std::size_t k) {
  require_rank2(x, "avg_pool_same");
  if (k % 2 == 0) throw ConfigError("avg_pool_same: window must be odd, got " + std::to_string(k));
  const std::size_t rows = x.dim(0), len = x.dim(1);
  const std::size_t half = (k - 1) / 2;
  if (k > len + 2 * half)
    throw ConfigError("avg_pool_same: window " + std::to_string(k) + " exceeds padded length");
  // Same for every row: output t averages inputs [lo(t), hi(t)).
  std::vector<std::size_t> lo(len), hi(len);
  for (std::size_t t = 0; t < len; ++t) {
    lo[t] = t >= half ? t - half : 0;
    hi[t] = std::min(len, t + half + 1);
  }
  Eigen::VectorXd data(x.values().size());
  ConstMatrixMap in = x.matrix();
  MatrixMap y(data.data(), rows, len);
  for (std::size_t t = 0; t < len; ++t)
    y.col(t) = in.middleCols(lo[t], hi[t] - lo[t]).rowwise().sum() / static_cast<double>(hi[t] - lo[t]);
  return make_result(x.shape(), std::move(data), {x}, [x, rows, len, lo, hi](const TensorImpl& out) {
    ConstMatrixMap g(out.grad.data(), rows, len);
    auto& gx = x.impl()->grad_buffer();
    MatrixMap dx(gx.data(), rows, len);
    for (std::size_t t = 0; t < len; ++t)
      dx.middleCols(lo[t], hi[t] - lo[t]).colwise() += g.col(t) / static_cast<double>(hi[t] - lo[t]);
  });
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, NormMode mode) {
  require_rank2(x, "batchnorm1d");
  const auto n = x.dim(0), c = x.dim(1);
  if (gamma.size() != c || beta.size() != c || stats.running_mean.size() != c || stats.running_var.size() != c)
    throw DimensionError("batchnorm1d: parameters do not match " + std::to_string(c) + " features");
  ConstMatrixMap in = x.matrix();
  Eigen::RowVectorXd mu, var;
  if (mode == NormMode::train) {
    if (n < 2) throw NumericError("batchnorm1d: degenerate batch of size 1 in train mode");
    mu = in.colwise().mean();
    var = (in.rowwise() - mu).array().square().colwise().mean();
    const double m = stats.momentum;
    const double unbiased = static_cast<double>(n) / static_cast<double>(n - 1);
    stats.running_mean.values() = (1 - m) * stats.running_mean.values() + m * mu.transpose();
    stats.running_var.values() = (1 - m) * stats.running_var.values() + m * unbiased * var.transpose();
  } else {
    mu = stats.running_mean.values().transpose();
    var = stats.running_var.values().transpose();
  }
  Eigen::RowVectorXd inv_std = (var.array() + stats.eps).rsqrt();
  RowMatrix xhat = (in.rowwise() - mu).array().rowwise() * inv_std.array();
  RowMatrix y = (xhat.array().rowwise() * gamma.matrix().row(0).array()).rowwise() + beta.matrix().row(0).array();
  Eigen::VectorXd data = Eigen::Map<Eigen::VectorXd>(y.data(), y.size());
  return make_result(x.shape(), std::move(data), {x, gamma, beta},
                     [x, gamma, beta, xhat, inv_std, mode, n, c](const TensorImpl& out) {
                       ConstMatrixMap g(out.grad.data(), n, c);
                       if (needs_grad(gamma))
                         gamma.impl()->accumulate(g.cwiseProduct(xhat).colwise().sum().transpose());
                       if (needs_grad(beta)) beta.impl()->accumulate(g.colwise().sum().transpose());
                       if (!needs_grad(x)) return;
                       RowMatrix dxhat = g.array().rowwise() * gamma.matrix().row(0).array();
                       auto& gx = x.impl()->grad_buffer();
                       MatrixMap dx(gx.data(), n, c);
                       if (mode == NormMode::eval) {
                         dx += (dxhat.array().rowwise() * inv_std.array()).matrix();
                         return;
                       }
                       const double nn = static_cast<double>(n);
                       Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
                       Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
                       RowMatrix t = (dxhat * nn).rowwise() - sum_d;
                       t -= (xhat.array().rowwise() * sum_dx.array()).matrix();
                       dx += (t.array().rowwise() * (inv_std.array() / nn)).matrix();
                     });
}

}  // namespace tshape
