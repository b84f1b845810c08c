#include "cgrn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace cgrn {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("shape extents must be positive: " + str());
  }
}

std::size_t Shape::numel() const {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << 'x';
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<TensorImpl>()) {
  impl_->data.assign(shape.numel(), Real{0});
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<Real> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
  if (shape.numel() != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                     shape.str());
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::full(Shape shape, Real value) {
  Tensor t(std::move(shape));
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::scalar(Real value) { return full(Shape{1}, value); }

Tensor Tensor::from(Shape shape, std::initializer_list<Real> values) {
  return Tensor(std::move(shape), std::vector<Real>(values));
}

TensorImpl& Tensor::impl() const {
  if (!impl_) throw std::logic_error("access to an undefined tensor");
  return *impl_;
}

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
  return impl().data[0];
}

void Tensor::set_requires_grad(bool value) {
  impl().requires_grad = value;
  if (!value) impl().grad.clear();
}

std::span<Real> Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient buffer");
  return impl().grad;
}

std::span<Real> Tensor::ensure_grad() const {
  auto& g = impl().grad;
  if (g.empty()) g.assign(impl().data.size(), Real{0});
  return g;
}

void Tensor::zero_grad() {
  auto& g = impl().grad;
  std::fill(g.begin(), g.end(), Real{0});
}

Tensor Tensor::detach() const { return Tensor(shape(), impl().data, false); }

Tensor Tensor::clone() const {
  Tensor t(shape(), impl().data, requires_grad());
  t.impl_->grad = impl().grad;
  return t;
}

}  // namespace cgrn
