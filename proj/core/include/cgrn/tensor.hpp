#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgrn {

#ifdef CGRN_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

/// Thrown for every contract violation detected by tensor operations
/// (shape mismatches, out-of-range indices, invalid arguments).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  std::size_t numel() const;
  const std::vector<std::size_t>& dims() const { return dims_; }

  bool operator==(const Shape& other) const = default;
  std::string str() const;

 private:
  std::vector<std::size_t> dims_;
};

struct TensorImpl {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool is_leaf = true;
};

/// Shared handle onto a dense row-major tensor. Copying a Tensor aliases the
/// same storage; use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> data, bool requires_grad = false);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, Real value);
  static Tensor scalar(Real value);
  static Tensor from(Shape shape, std::initializer_list<Real> values);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl().shape; }
  std::size_t numel() const { return impl().data.size(); }
  std::size_t rank() const { return impl().shape.rank(); }
  std::size_t dim(std::size_t axis) const { return impl().shape[axis]; }

  std::span<Real> data() { return impl().data; }
  std::span<const Real> data() const { return impl().data; }
  Real* ptr() { return impl().data.data(); }
  const Real* ptr() const { return impl().data.data(); }
  Real item() const;

  bool requires_grad() const { return impl().requires_grad; }
  void set_requires_grad(bool value);
  bool is_leaf() const { return impl().is_leaf; }

  bool has_grad() const { return !impl().grad.empty(); }
  // Gradient storage is shared through the handle, so const handles captured
  // by backward closures can still accumulate into it.
  std::span<Real> grad() const;
  /// Allocates a zero gradient buffer if none exists and returns it.
  std::span<Real> ensure_grad() const;
  void zero_grad();
  void drop_grad() { impl().grad.clear(); }

  /// Same values, no gradient tracking, independent storage.
  Tensor detach() const;
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  TensorImpl& impl() const;
  std::shared_ptr<TensorImpl> impl_ptr() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Index helper for NCHW tensors.
inline std::size_t offset4(const Shape& s, std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  return ((n * s[1] + c) * s[2] + h) * s[3] + w;
}

}  // namespace cgrn
