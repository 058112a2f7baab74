#pragma once

// Dense row-major tensors of doubles with a reverse-mode gradient tape.
//
// A Tensor is a shared handle. Operations in ops.hpp record a node on their
// output whenever gradient mode is on and some input requires a gradient;
// backward() walks those nodes in reverse topological order and then drops
// them, so each forward pass builds a fresh tape.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace tshape {

using Shape = std::vector<std::size_t>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct TensorImpl;

/// Recorded operation: the inputs it read and how to push the output
/// gradient back into them.
struct TapeNode {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
  Shape shape;
  Eigen::VectorXd data;
  Eigen::VectorXd grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::shared_ptr<TapeNode> node;  // null for leaves

  Eigen::VectorXd& grad_buffer();
  void accumulate(const Eigen::Ref<const Eigen::VectorXd>& g) { grad_buffer() += g; }
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Eigen::VectorXd data);

  static Tensor zeros(const Shape& shape);
  static Tensor constant(const Shape& shape, double value);
  static Tensor from_values(const Shape& shape, const std::vector<double>& values);
  static Tensor from_matrix(const Eigen::Ref<const RowMatrix>& m);
  static Tensor scalar(double value);
  /// Entries drawn i.i.d. from N(0, stddev^2).
  static Tensor randn(const Shape& shape, std::mt19937_64& rng, double stddev = 1.0);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t size() const { return static_cast<std::size_t>(impl_->data.size()); }

  Eigen::VectorXd& values() { return impl_->data; }
  const Eigen::VectorXd& values() const { return impl_->data; }
  double& operator[](std::size_t i) { return impl_->data[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return impl_->data[static_cast<Eigen::Index>(i)]; }

  /// 2-D view; rank-1 tensors are viewed as a single row.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on = true);
  bool has_grad() const { return impl_->grad.size() != 0; }
  /// Gradient buffer; zeros if nothing has been accumulated yet.
  Eigen::VectorXd grad() const;
  ConstMatrixMap grad_matrix() const;
  void zero_grad() { impl_->grad.resize(0); }
  bool is_leaf() const { return impl_->node == nullptr; }

  /// Value copy with no tape history and no gradient requirement.
  Tensor detach() const;
  /// Deep copy that keeps requires_grad (leaves only).
  Tensor clone() const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Whether new operations are recorded (thread-local).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// The recorded operations reachable from a root, in topological order.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t node_count() const { return order_.size(); }
  /// Seeds d(root)/d(root) = 1, runs every backward rule once, then frees
  /// the recorded nodes.
  void backward();

 private:
  std::vector<std::shared_ptr<TensorImpl>> order_;
  std::shared_ptr<TensorImpl> root_;
};

/// Populates gradients on every requires_grad leaf reachable from a scalar
/// loss. Gradients accumulate across calls until zero_grad().
void backward(const Tensor& loss);

namespace detail {

/// Builds an op result and, when gradients are tracked, attaches a tape node.
Tensor make_result(Shape shape, Eigen::VectorXd data, const std::vector<Tensor>& inputs,
                   std::function<void(const TensorImpl& out)> backward_fn);

inline bool needs_grad(const Tensor& t) { return t.impl()->requires_grad; }

}  // namespace detail

}  // namespace tshape
