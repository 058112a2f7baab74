#include "tshape/tensor.hpp"

#include "tshape/errors.hpp"

#include <unordered_set>

namespace tshape {

namespace {
thread_local bool t_grad_enabled = true;
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Eigen::VectorXd& TensorImpl::grad_buffer() {
  if (grad.size() != data.size()) grad = Eigen::VectorXd::Zero(data.size());
  return grad;
}

Tensor::Tensor(Shape shape, Eigen::VectorXd data) : impl_(std::make_shared<TensorImpl>()) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
  for (auto e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  if (shape_size(shape) != static_cast<std::size_t>(data.size()))
    throw DimensionError("shape " + shape_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::zeros(const Shape& shape) { return constant(shape, 0.0); }

Tensor Tensor::constant(const Shape& shape, double value) {
  return Tensor(shape, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(shape_size(shape)), value));
}

Tensor Tensor::from_values(const Shape& shape, const std::vector<double>& values) {
  return Tensor(shape, Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

Tensor Tensor::from_matrix(const Eigen::Ref<const RowMatrix>& m) {
  Eigen::VectorXd data(m.size());
  MatrixMap(data.data(), m.rows(), m.cols()) = m;
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(data));
}

Tensor Tensor::scalar(double value) { return constant({1}, value); }

Tensor Tensor::randn(const Shape& shape, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Eigen::VectorXd data(static_cast<Eigen::Index>(shape_size(shape)));
  for (auto& x : data) x = dist(rng);
  return Tensor(shape, std::move(data));
}

MatrixMap Tensor::matrix() {
  if (rank() == 1) return MatrixMap(impl_->data.data(), 1, impl_->data.size());
  if (rank() != 2) throw DimensionError("matrix view needs rank <= 2, got " + shape_string(shape()));
  return MatrixMap(impl_->data.data(), dim(0), dim(1));
}

ConstMatrixMap Tensor::matrix() const {
  if (rank() == 1) return ConstMatrixMap(impl_->data.data(), 1, impl_->data.size());
  if (rank() != 2) throw DimensionError("matrix view needs rank <= 2, got " + shape_string(shape()));
  return ConstMatrixMap(impl_->data.data(), dim(0), dim(1));
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

Eigen::VectorXd Tensor::grad() const {
  if (has_grad()) return impl_->grad;
  return Eigen::VectorXd::Zero(impl_->data.size());
}

ConstMatrixMap Tensor::grad_matrix() const {
  impl_->grad_buffer();
  if (rank() == 1) return ConstMatrixMap(impl_->grad.data(), 1, impl_->grad.size());
  return ConstMatrixMap(impl_->grad.data(), dim(0), dim(1));
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

Tensor Tensor::clone() const {
  Tensor t(impl_->shape, impl_->data);
  t.set_requires_grad(impl_->requires_grad);
  return t;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tape Tape::record(const Tensor& root) {
  Tape tape;
  tape.root_ = root.impl();
  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_set<const TensorImpl*> visited;
  std::vector<std::pair<std::shared_ptr<TensorImpl>, std::size_t>> stack;
  if (root.impl()->node) stack.emplace_back(root.impl(), 0);
  visited.insert(root.impl().get());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    const auto& inputs = impl->node->inputs;
    if (next < inputs.size()) {
      auto child = inputs[next++];
      if (child->node && visited.insert(child.get()).second) stack.emplace_back(child, 0);
    } else {
      tape.order_.push_back(impl);
      stack.pop_back();
    }
  }
  return tape;
}

void Tape::backward() {
  if (!root_) return;
  root_->grad_buffer().setOnes();
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    TensorImpl& out = **it;
    if (out.grad.size() != 0) out.node->backward(out);
  }
  for (auto& impl : order_) impl->node.reset();
  order_.clear();
}

void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw DimensionError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  Tape::record(loss).backward();
}

namespace detail {

Tensor make_result(Shape shape, Eigen::VectorXd data, const std::vector<Tensor>& inputs,
                   std::function<void(const TensorImpl& out)> backward_fn) {
  Tensor out(std::move(shape), std::move(data));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || t.impl()->requires_grad;
  if (!any) return out;
  auto node = std::make_shared<TapeNode>();
  node->inputs.reserve(inputs.size());
  for (const auto& t : inputs) node->inputs.push_back(t.impl());
  node->backward = std::move(backward_fn);
  out.impl()->node = std::move(node);
  out.impl()->requires_grad = true;
  return out;
}

}  // namespace detail

}  // namespace tshape
