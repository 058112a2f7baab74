#include "doctest.h"
#include "op_checks.hpp"
#include "oracles.hpp"

#include "tshape/attention.hpp"
#include "tshape/errors.hpp"
#include "tshape/ops.hpp"
#include "tshape/optim.hpp"

#include <functional>

using namespace tshape;

namespace {

using checks::worst_gradient_error;
using checks::Op;

Tensor rnd(std::mt19937_64& rng, Shape shape, double sd = 1.0) { return Tensor::randn(shape, rng, sd); }

}  // namespace

TEST_SUITE("matmul") {
  TEST_CASE("identity and hand-computed products") {
    const auto I = Tensor::from_values({2, 2}, {1, 0, 0, 1});
    const auto B = Tensor::from_values({2, 2}, {3, 4, 5, 6});
    CHECK(matmul(I, B).values() == B.values());
    const auto r = matmul(Tensor::from_values({1, 2}, {1, 2}), Tensor::from_values({2, 1}, {3, 4}));
    CHECK(r.shape() == Shape{1, 1});
    CHECK(r.item() == 11.0);
  }

  TEST_CASE("gradient of sum(a·b) w.r.t. a is the row-broadcast of column sums of b") {
    std::mt19937_64 rng(3);
    Tensor a = rnd(rng, {4, 5}).set_requires_grad();
    const Tensor b = rnd(rng, {5, 3});
    backward(sum(matmul(a, b)));
    const Eigen::VectorXd row_sums = b.matrix().rowwise().sum();
    auto loss = [&] {
      NoGradGuard g;
      return sum(matmul(a, b)).item();
    };
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(a.grad_matrix()(i, j) == doctest::Approx(row_sums[j]).epsilon(1e-12));
        const double fd = oracle::central_difference(loss, a, i * 5 + j, 1e-5);
        CHECK(oracle::relative_error(a.grad_matrix()(i, j), fd) < 1e-6);
      }
  }

  TEST_CASE("shape mismatch names both shapes") {
    const auto a = Tensor::zeros({2, 3});
    const auto b = Tensor::zeros({2, 3});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), DimensionError);
  }
}

TEST_SUITE("conv1d") {
  TEST_CASE("delta kernel is the identity; box kernel sums with zero padding") {
    const auto x = Tensor::from_values({1, 3}, {1, 2, 3});
    const auto zero = Tensor::zeros({1});
    CHECK(conv1d(x, Tensor::from_values({1, 1, 3}, {0, 1, 0}), zero).values() == x.values());
    const auto box = conv1d(x, Tensor::from_values({1, 1, 3}, {1, 1, 1}), zero);
    CHECK(box.values() == Eigen::Vector3d(3, 6, 5));
  }

  TEST_CASE("matches the naive oracle on every shape up to C=4, L=32, k in {1,3,5,7}") {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (std::size_t cin = 1; cin <= 4; ++cin)
      for (std::size_t cout = 1; cout <= 4; ++cout)
        for (std::size_t k : {1, 3, 5, 7})
          for (std::size_t len : {4, 9, 16, 32}) {
            const auto x = oracle::random_matrix(rng, static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(len));
            const Tensor w = rnd(rng, {cout, cin, k});
            const Tensor b = rnd(rng, {cout});
            const Tensor got = conv1d(Tensor::from_matrix(x), w, b);
            const std::vector<double> wv(w.values().data(), w.values().data() + w.size());
            const std::vector<double> bv(b.values().data(), b.values().data() + b.size());
            const RowMatrix want = oracle::conv1d(x, wv, cout, k, bv);
            worst = std::max(worst, (got.matrix() - want).cwiseAbs().maxCoeff());
          }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("batched input equals per-sample convolution") {
    std::mt19937_64 rng(12);
    const Tensor x = rnd(rng, {3, 2, 10});
    const Tensor w = rnd(rng, {4, 2, 5});
    const Tensor b = rnd(rng, {4});
    const Tensor batched = conv1d(x, w, b);
    CHECK(batched.shape() == Shape{3, 4, 10});
    for (std::size_t n = 0; n < 3; ++n) {
      const Tensor xn(Shape{2, 10}, x.values().segment(static_cast<Eigen::Index>(n * 20), 20));
      const Tensor one = conv1d(xn, w, b);
      CHECK((one.values() - batched.values().segment(static_cast<Eigen::Index>(n * 40), 40)).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }

  TEST_CASE("rejects even kernels") {
    const auto x = Tensor::zeros({1, 3});
    CHECK_THROWS_AS(conv1d(x, Tensor::zeros({1, 1, 2}), Tensor::zeros({1})), ConfigError);
  }

  TEST_CASE("kernel wider than the input only sees the in-range taps") {
    const auto x = Tensor::from_values({1, 2}, {2, 3});
    const auto w = Tensor::from_values({1, 1, 7}, {1, 2, 3, 4, 5, 6, 7});
    const auto y = conv1d(x, w, Tensor::zeros({1}));
    CHECK(y.values() == Eigen::Vector2d(4 * 2 + 5 * 3, 3 * 2 + 4 * 3));
    CHECK(worst_gradient_error([&](auto& v) { return conv1d(v[0], v[1], v[2]); },
                               {x.clone(), w.clone(), Tensor::zeros({1})}) < 1e-6);
  }
}

TEST_SUITE("softmax") {
  TEST_CASE("reference values") {
    auto s = softmax_lastdim(Tensor::from_values({3}, {0, 0, 0}));
    for (int i = 0; i < 3; ++i) CHECK(s.values()[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    s = softmax_lastdim(Tensor::from_values({2}, {1000, 1000}));
    CHECK(s.values()[0] == 0.5);
    CHECK(s.values()[1] == 0.5);
    s = softmax_lastdim(Tensor::from_values({3}, {1, 2, 3}));
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(s.values()[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
    CHECK(std::abs(s.values()[0] - 0.09003057) < 5e-9);
    CHECK(std::abs(s.values()[1] - 0.24472847) < 5e-9);
    CHECK(std::abs(s.values()[2] - 0.66524096) < 5e-9);
  }

  TEST_CASE("rows are distributions") {
    std::mt19937_64 rng(4);
    const auto s = softmax_lastdim(rnd(rng, {20, 7}, 5.0));
    const auto m = s.matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) CHECK(std::abs(m.row(i).sum() - 1.0) < 1e-12);
    CHECK(m.minCoeff() >= 0.0);
    CHECK(m.maxCoeff() <= 1.0);
  }

  TEST_CASE("non-finite input is a numeric error") {
    CHECK_THROWS_AS(softmax_lastdim(Tensor::from_values({2}, {1.0, NAN})), NumericError);
  }
}

TEST_SUITE("activations") {
  TEST_CASE("symmetry points and asymptote") {
    CHECK(gelu(Tensor::scalar(0.0)).item() == 0.0);
    CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
    for (double x : {6.0, 8.0, 20.0}) CHECK(std::abs(gelu(Tensor::scalar(x)).item() - x) < 1e-6);
    const double x = 0.3;
    const double want = 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
    CHECK(gelu(Tensor::scalar(x)).item() == doctest::Approx(want).epsilon(1e-15));
    CHECK(sigmoid(Tensor::scalar(-800.0)).item() == 0.0);
    CHECK(sigmoid(Tensor::scalar(800.0)).item() == 1.0);
  }

  TEST_CASE("gradients at 0.7 match finite differences") {
    for (auto f : {+[](const Tensor& t) { return gelu(t); }, +[](const Tensor& t) { return sigmoid(t); }}) {
      Tensor x = Tensor::scalar(0.7).set_requires_grad();
      backward(f(x));
      auto value = [&] {
        NoGradGuard g;
        return f(x).item();
      };
      const double fd = oracle::central_difference(value, x, 0, 1e-5);
      CHECK(oracle::relative_error(x.grad()[0], fd) < 1e-6);
    }
  }
}

TEST_SUITE("batchnorm") {
  BatchNormStats fresh(std::size_t c) { return {Tensor::zeros({c}), Tensor::constant({c}, 1.0)}; }

  TEST_CASE("constant columns normalize to zero; gamma 0 yields beta") {
    auto st = fresh(3);
    const auto x = Tensor::from_values({4, 3}, {1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3});
    const auto y = batchnorm1d(x, Tensor::constant({3}, 1.0), Tensor::zeros({3}), st, NormMode::train);
    CHECK(y.values().cwiseAbs().maxCoeff() == 0.0);
    std::mt19937_64 rng(5);
    const auto beta = rnd(rng, {3});
    const auto z = batchnorm1d(rnd(rng, {5, 3}), Tensor::zeros({3}), beta, st, NormMode::train);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(z.matrix().row(i) == beta.matrix().row(0));
  }

  TEST_CASE("train mode output has column mean beta and variance gamma^2 (shrunk by eps)") {
    std::mt19937_64 rng(6);
    auto st = fresh(4);
    const auto gamma = rnd(rng, {4});
    const auto beta = rnd(rng, {4});
    const Tensor x = rnd(rng, {8, 4}, 3.0);
    const Tensor out = batchnorm1d(x, gamma, beta, st, NormMode::train);
    const auto y = out.matrix();
    const auto xm = x.matrix();
    for (Eigen::Index c = 0; c < 4; ++c) {
      const auto i = static_cast<std::size_t>(c);
      const double m = y.col(c).mean();
      const double v = (y.col(c).array() - m).square().mean();
      const double vx = (xm.col(c).array() - xm.col(c).mean()).square().mean();
      CHECK(std::abs(m - beta[i]) < 1e-10);
      CHECK(std::abs(v - gamma[i] * gamma[i] * vx / (vx + 1e-5)) < 1e-12);
    }
  }

  TEST_CASE("running statistics use momentum 0.1 and eval mode reads them") {
    auto st = fresh(1);
    const auto x = Tensor::from_values({4, 1}, {1, 2, 3, 6});
    batchnorm1d(x, Tensor::constant({1}, 1.0), Tensor::zeros({1}), st, NormMode::train);
    CHECK(st.running_mean[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 3.0).epsilon(1e-15));
    CHECK(st.running_var[0] == doctest::Approx(0.9 * 1.0 + 0.1 * (14.0 / 3.0)).epsilon(1e-15));
    const auto y = batchnorm1d(Tensor::from_values({1, 1}, {2.0}), Tensor::constant({1}, 2.0),
                               Tensor::constant({1}, 0.5), st, NormMode::eval);
    CHECK(y.item() == doctest::Approx(2.0 * (2.0 - st.running_mean[0]) / std::sqrt(st.running_var[0] + 1e-5) + 0.5)
                          .epsilon(1e-14));
  }

  TEST_CASE("single row in train mode is rejected") {
    auto st = fresh(2);
    CHECK_THROWS_AS(batchnorm1d(Tensor::zeros({1, 2}), Tensor::constant({2}, 1.0), Tensor::zeros({2}), st,
                                NormMode::train),
                    NumericError);
  }
}

TEST_SUITE("attention") {
  TEST_CASE("single token attends to itself") {
    std::mt19937_64 rng(7);
    const auto w = make_attention_weights(4, 2, rng);
    const Tensor v = rnd(rng, {1, 4});
    std::vector<RowMatrix> probs;
    const Tensor out = multihead_attention(v, v, v, w, &probs);
    for (const auto& p : probs) CHECK(p(0, 0) == 1.0);
    const Tensor want = add_bias(matmul(add_bias(matmul(v, w.value_w), w.value_b), w.out_w), w.out_b);
    CHECK((out.values() - want.values()).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("identical tokens give uniform rows") {
    std::mt19937_64 rng(8);
    const auto w = make_attention_weights(6, 3, rng);
    RowMatrix x(5, 6);
    x.rowwise() = oracle::random_matrix(rng, 1, 6).row(0);
    std::vector<RowMatrix> probs;
    const Tensor t = Tensor::from_matrix(x);
    multihead_attention(t, t, t, w, &probs);
    for (const auto& p : probs) CHECK((p.array() - 0.2).abs().maxCoeff() < 1e-15);
  }

  TEST_CASE("matches the naive oracle for d <= 16, L <= 16") {
    std::mt19937_64 rng(9);
    double worst = 0.0, worst_p = 0.0;
    for (std::size_t d : {2, 4, 8, 12, 16})
      for (std::size_t h : {1, 2, 4})
        for (std::size_t L : {1, 3, 6, 16}) {
          if (d % h) continue;
          const auto w = make_attention_weights(d, h, rng);
          const auto q = oracle::random_matrix(rng, static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(d));
          const auto k = oracle::random_matrix(rng, static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(d));
          const auto v = oracle::random_matrix(rng, static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(d));
          std::vector<RowMatrix> got_p, want_p;
          const Tensor got =
              multihead_attention(Tensor::from_matrix(q), Tensor::from_matrix(k), Tensor::from_matrix(v), w, &got_p);
          const RowMatrix want = oracle::mha(q, k, v, w, &want_p);
          worst = std::max(worst, (got.matrix() - want).cwiseAbs().maxCoeff());
          for (std::size_t i = 0; i < h; ++i) worst_p = std::max(worst_p, (got_p[i] - want_p[i]).cwiseAbs().maxCoeff());
        }
    CHECK(worst < 1e-10);
    CHECK(worst_p < 1e-12);
  }

  TEST_CASE("heads must divide the dimension") {
    std::mt19937_64 rng(10);
    CHECK_THROWS_AS(make_attention_weights(6, 4, rng), ConfigError);
  }
}

TEST_SUITE("finite differences") {
  TEST_CASE("every differentiable op") {
    std::mt19937_64 rng(21);
    const auto cases = checks::differentiable_ops(rng);
    for (const auto& c : cases) {
      CAPTURE(c.name);
      CHECK(worst_gradient_error(c.op, c.inputs) < c.tol);
    }
  }

  TEST_CASE("multihead attention through every weight") {
    std::mt19937_64 rng(22);
    AttentionWeights w = make_attention_weights(4, 2, rng);
    std::vector<Tensor> inputs{rnd(rng, {3, 4}), rnd(rng, {3, 4}), rnd(rng, {3, 4})};
    for (auto& [name, t] : w.named()) {
      t.values() = Eigen::VectorXd::Random(t.values().size());
      inputs.push_back(t);
    }
    auto op = [&](const std::vector<Tensor>& v) { return multihead_attention(v[0], v[1], v[2], w); };
    CHECK(worst_gradient_error(op, inputs) < 1e-4);
  }
}

TEST_SUITE("backward") {
  TEST_CASE("sum and sum of squares") {
    std::mt19937_64 rng(30);
    Tensor x = rnd(rng, {2, 3, 2}).set_requires_grad();
    backward(sum(x));
    CHECK(x.grad() == Eigen::VectorXd::Ones(12));
    x.zero_grad();
    backward(sum(mul(x, x)));
    CHECK((x.grad() - 2.0 * x.values()).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("fan-out accumulates both paths") {
    Tensor x = Tensor::from_values({3}, {1, -2, 5}).set_requires_grad();
    backward(sum(add(x, x)));
    CHECK(x.grad() == Eigen::VectorXd::Constant(3, 2.0));
  }

  TEST_CASE("gradients accumulate across calls until cleared") {
    Tensor x = Tensor::from_values({2}, {1, 2}).set_requires_grad();
    backward(sum(x));
    backward(sum(x));
    CHECK(x.grad() == Eigen::VectorXd::Constant(2, 2.0));
  }

  TEST_CASE("non-scalar loss is rejected") {
    Tensor x = Tensor::zeros({2}).set_requires_grad();
    CHECK_THROWS_AS(backward(scale(x, 2.0)), DimensionError);
  }

  TEST_CASE("nothing is recorded under a no-grad guard") {
    Tensor x = Tensor::zeros({2}).set_requires_grad();
    NoGradGuard g;
    CHECK(sum(x).is_leaf());
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::from_values({3}, {1, 2, 3}).set_requires_grad();
    std::vector<Tensor> ps{p};
    AdamState st;
    p.impl()->grad_buffer().setZero();
    adam_step(ps, st);
    CHECK(p.values() == Eigen::Vector3d(1, 2, 3));
    CHECK(st.step == 1);
  }

  TEST_CASE("first step moves by lr·g/(|g| + eps·sqrt(1-beta2))") {
    Tensor p = Tensor::scalar(1.0).set_requires_grad();
    std::vector<Tensor> ps{p};
    AdamState st;
    st.lr = 0.1;
    const double g = 0.37;
    p.impl()->grad_buffer()[0] = g;
    adam_step(ps, st);
    // m̂ = g, v̂ = g², update = lr·m̂/(sqrt(v̂)+eps)
    CHECK(p.item() == doctest::Approx(1.0 - 0.1 * g / (std::abs(g) + 1e-8)).epsilon(1e-15));
  }

  TEST_CASE("constant gradient moves monotonically downhill") {
    Tensor p = Tensor::scalar(0.0).set_requires_grad();
    std::vector<Tensor> ps{p};
    AdamState st;
    double prev = 0.0;
    for (int i = 0; i < 2; ++i) {
      p.zero_grad();
      p.impl()->grad_buffer()[0] = 2.5;
      adam_step(ps, st);
      CHECK(p.item() < prev);
      prev = p.item();
    }
    CHECK(st.step == 2);
  }

  TEST_CASE("mismatched moments are rejected") {
    std::vector<Tensor> ps{Tensor::zeros({2}).set_requires_grad()};
    AdamState st;
    adam_step(ps, st);
    std::vector<Tensor> other{Tensor::zeros({3}).set_requires_grad()};
    CHECK_THROWS_AS(adam_step(other, st), DimensionError);
  }

  TEST_CASE("ten seeded steps are bit-identical") {
    auto run = [] {
      std::mt19937_64 rng(99);
      Tensor w = Tensor::randn({4, 3}, rng).set_requires_grad();
      const Tensor x = Tensor::randn({5, 4}, rng);
      const Tensor y = Tensor::randn({5, 3}, rng);
      std::vector<Tensor> ps{w};
      AdamState st;
      for (int i = 0; i < 10; ++i) {
        backward(mse_loss(matmul(x, w), y));
        adam_step(ps, st);
        zero_grad(ps);
      }
      return w.values();
    };
    CHECK(run() == run());
  }
}
