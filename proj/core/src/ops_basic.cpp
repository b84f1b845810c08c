#include <algorithm>
#include <cmath>

#include "cgrn/graph.hpp"
#include "cgrn/ops.hpp"
#include "eigen_maps.hpp"

namespace cgrn::ops {

using detail::as_matrix;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

Real stable_sigmoid(Real v) {
  if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
  const Real e = std::exp(v);
  return e / (Real(1) + e);
}

}  // namespace

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = xs[i] > 0 ? xs[i] : Real{0};
  if (Graph* g = Graph::tracking({&x})) {
    g->record("relu", {x}, out, [x, out]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      const auto xs = x.data();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (xs[i] > 0) dx[i] += dy[i];
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = stable_sigmoid(xs[i]);
  if (Graph* g = Graph::tracking({&x})) {
    g->record("sigmoid", {x}, out, [x, out]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      const auto ys = out.data();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * ys[i] * (1 - ys[i]);
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(0)) {
    throw ShapeError("linear: input " + x.shape().str() + " incompatible with weight " + weight.shape().str());
  }
  const std::size_t batch = x.dim(0), in = x.dim(1), outd = weight.dim(1);
  if (bias.defined() && bias.shape() != Shape{outd}) {
    throw ShapeError("linear: bias " + bias.shape().str() + " does not match output width " + std::to_string(outd));
  }
  Tensor out(Shape{batch, outd});
  as_matrix(out.ptr(), batch, outd).noalias() = as_matrix(x.ptr(), batch, in) * as_matrix(weight.ptr(), in, outd);
  if (bias.defined()) {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < outd; ++o) out.ptr()[b * outd + o] += bias.ptr()[o];
    }
  }
  if (Graph* g = Graph::tracking({&x, &weight, &bias})) {
    g->record("linear", {x, weight, bias}, out, [x, weight, bias, out]() mutable {
      const std::size_t batch = x.dim(0), in = x.dim(1), outd = weight.dim(1);
      const auto dy = as_matrix(out.grad().data(), batch, outd);
      if (x.requires_grad()) {
        as_matrix(x.ensure_grad().data(), batch, in).noalias() += dy * as_matrix(weight.ptr(), in, outd).transpose();
      }
      if (weight.requires_grad()) {
        as_matrix(weight.ensure_grad().data(), in, outd).noalias() += as_matrix(x.ptr(), batch, in).transpose() * dy;
      }
      if (bias.defined() && bias.requires_grad()) {
        auto db = bias.ensure_grad();
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t o = 0; o < outd; ++o) db[o] += dy(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(o));
        }
      }
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis) {
  if (tensors.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = tensors.front().shape();
  if (axis >= first.rank()) throw ShapeError("concat: axis out of range for " + first.str());
  std::vector<std::size_t> dims = first.dims();
  dims[axis] = 0;
  for (const Tensor& t : tensors) {
    if (t.rank() != first.rank()) throw ShapeError("concat: rank mismatch " + first.str() + " vs " + t.shape().str());
    for (std::size_t a = 0; a < first.rank(); ++a) {
      if (a != axis && t.dim(a) != first[a]) {
        throw ShapeError("concat: inputs disagree off the concat axis: " + first.str() + " vs " + t.shape().str());
      }
    }
    dims[axis] += t.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= first[a];
  for (std::size_t a = axis + 1; a < first.rank(); ++a) inner *= first[a];

  Tensor out{Shape(dims)};
  const std::size_t out_chunk = dims[axis] * inner;
  std::size_t offset = 0;
  for (const Tensor& t : tensors) {
    const std::size_t chunk = t.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(t.ptr() + o * chunk, chunk, out.ptr() + o * out_chunk + offset);
    }
    offset += chunk;
  }

  if (Graph* g = Graph::tracking(tensors)) {
    g->record("concat", tensors, out, [tensors, out, axis, outer, inner, out_chunk]() mutable {
      const Real* dy = out.grad().data();
      std::size_t offset = 0;
      for (Tensor t : tensors) {
        const std::size_t chunk = t.dim(axis) * inner;
        if (t.requires_grad()) {
          Real* dx = t.ensure_grad().data();
          for (std::size_t o = 0; o < outer; ++o) {
            const Real* src = dy + o * out_chunk + offset;
            for (std::size_t i = 0; i < chunk; ++i) dx[o * chunk + i] += src[i];
          }
        }
        offset += chunk;
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape.numel() != x.numel()) {
    throw ShapeError("reshape: cannot view " + x.shape().str() + " as " + shape.str());
  }
  Tensor out(std::move(shape), std::vector<Real>(x.data().begin(), x.data().end()));
  if (Graph* g = Graph::tracking({&x})) {
    g->record("reshape", {x}, out, [x, out]() mutable { accumulate_grad(x, out.grad()); });
  }
  return out;
}

Tensor flatten(const Tensor& x) { return reshape(x, Shape{x.dim(0), x.numel() / x.dim(0)}); }

Tensor repeat_batch(const Tensor& x, std::size_t times) {
  if (times == 0) throw ShapeError("repeat_batch: times must be >= 1");
  std::vector<std::size_t> dims = x.shape().dims();
  dims[0] *= times;
  Tensor out{Shape(dims)};
  const std::size_t n = x.numel();
  for (std::size_t j = 0; j < times; ++j) std::copy_n(x.ptr(), n, out.ptr() + j * n);
  if (Graph* g = Graph::tracking({&x})) {
    g->record("repeat_batch", {x}, out, [x, out, times]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      const std::size_t n = dx.size();
      for (std::size_t j = 0; j < times; ++j) {
        for (std::size_t i = 0; i < n; ++i) dx[i] += dy[j * n + i];
      }
    });
  }
  return out;
}

Tensor slice_batch(const Tensor& x, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > x.dim(0)) {
    throw ShapeError("slice_batch: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + x.shape().str());
  }
  std::vector<std::size_t> dims = x.shape().dims();
  dims[0] = count;
  Tensor out{Shape(dims)};
  const std::size_t row = x.numel() / x.dim(0);
  std::copy_n(x.ptr() + begin * row, count * row, out.ptr());
  if (Graph* g = Graph::tracking({&x})) {
    g->record("slice_batch", {x}, out, [x, out, begin, row]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[begin * row + i] += dy[i];
    });
  }
  return out;
}

Tensor embedding(const Tensor& table, const std::vector<std::size_t>& indices) {
  if (table.rank() != 2) throw ShapeError("embedding: table must be rank 2, got " + table.shape().str());
  if (indices.empty()) throw ShapeError("embedding: no indices");
  const std::size_t rows = table.dim(0), width = table.dim(1);
  for (std::size_t idx : indices) {
    if (idx >= rows) {
      throw ShapeError("embedding: index " + std::to_string(idx) + " out of range for table with " +
                       std::to_string(rows) + " rows");
    }
  }
  Tensor out(Shape{indices.size(), width});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(table.ptr() + indices[i] * width, width, out.ptr() + i * width);
  }
  if (Graph* g = Graph::tracking({&table})) {
    g->record("embedding", {table}, out, [table, out, indices, width]() mutable {
      auto dt = table.ensure_grad();
      const auto dy = out.grad();
      for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t e = 0; e < width; ++e) dt[indices[i] * width + e] += dy[i * width + e];
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.ptr()[i] = a.ptr()[i] + b.ptr()[i];
  if (Graph* g = Graph::tracking({&a, &b})) {
    g->record("add", {a, b}, out, [a, b, out]() mutable {
      accumulate_grad(a, out.grad());
      accumulate_grad(b, out.grad());
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.ptr()[i] = a.ptr()[i] - b.ptr()[i];
  if (Graph* g = Graph::tracking({&a, &b})) {
    g->record("sub", {a, b}, out, [a, b, out]() mutable {
      accumulate_grad(a, out.grad());
      if (b.requires_grad()) {
        auto db = b.ensure_grad();
        const auto dy = out.grad();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] -= dy[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.ptr()[i] = a.ptr()[i] * b.ptr()[i];
  if (Graph* g = Graph::tracking({&a, &b})) {
    g->record("mul", {a, b}, out, [a, b, out]() mutable {
      const auto dy = out.grad();
      if (a.requires_grad()) {
        auto da = a.ensure_grad();
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * b.ptr()[i];
      }
      if (b.requires_grad()) {
        auto db = b.ensure_grad();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * a.ptr()[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, Real factor) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out.ptr()[i] = x.ptr()[i] * factor;
  if (Graph* g = Graph::tracking({&x})) {
    g->record("scale", {x}, out, [x, out, factor]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * factor;
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  Real s = 0;
  for (Real v : x.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (Graph* g = Graph::tracking({&x})) {
    g->record("sum", {x}, out, [x, out]() mutable {
      auto dx = x.ensure_grad();
      const Real dy = out.grad()[0];
      for (Real& v : dx) v += dy;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  Real s = 0;
  for (Real v : x.data()) s += v;
  const Real n = static_cast<Real>(x.numel());
  Tensor out = Tensor::scalar(s / n);
  if (Graph* g = Graph::tracking({&x})) {
    g->record("mean", {x}, out, [x, out, n]() mutable {
      auto dx = x.ensure_grad();
      const Real dy = out.grad()[0] / n;
      for (Real& v : dx) v += dy;
    });
  }
  return out;
}

Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<Real>& coeffs) {
  if (terms.empty() || terms.size() != coeffs.size()) {
    throw ShapeError("weighted_sum: need one coefficient per term");
  }
  Real s = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) s += coeffs[i] * terms[i].item();
  Tensor out = Tensor::scalar(s);
  if (Graph* g = Graph::tracking(terms)) {
    g->record("weighted_sum", terms, out, [terms, coeffs, out]() mutable {
      const Real dy = out.grad()[0];
      for (std::size_t i = 0; i < terms.size(); ++i) {
        Tensor t = terms[i];
        if (t.requires_grad()) t.ensure_grad()[0] += coeffs[i] * dy;
      }
    });
  }
  return out;
}

}  // namespace cgrn::ops
