#include "cgrn/graph.hpp"
#include "cgrn/ops.hpp"

namespace cgrn::ops {

namespace {

Shape pooled_shape(const Tensor& input, std::size_t kernel, std::size_t stride, const char* op) {
  if (input.rank() != 4) throw ShapeError(std::string(op) + ": expected rank-4 input, got " + input.shape().str());
  if (kernel == 0 || stride == 0) throw ShapeError(std::string(op) + ": kernel and stride must be >= 1");
  if (kernel > input.dim(2) || kernel > input.dim(3)) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(kernel) + " exceeds input " + input.shape().str());
  }
  return Shape{input.dim(0), input.dim(1), (input.dim(2) - kernel) / stride + 1, (input.dim(3) - kernel) / stride + 1};
}

}  // namespace

Tensor maxpool2d(const Tensor& input, std::size_t kernel, std::size_t stride) {
  const Shape os = pooled_shape(input, kernel, stride, "maxpool2d");
  const std::size_t planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = os[2], ow = os[3];
  Tensor out(os);
  std::vector<std::size_t> argmax(out.numel());

  const Real* x = input.ptr();
  Real* y = out.ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    const Real* plane = x + p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = (oy * stride + ky) * w + ox * stride + kx;
            if (plane[idx] > plane[best]) best = idx;
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        y[o] = plane[best];
        argmax[o] = p * h * w + best;
      }
    }
  }

  if (Graph* g = Graph::tracking({&input})) {
    g->record("maxpool2d", {input}, out, [input, out, argmax = std::move(argmax)]() mutable {
      auto dx = input.ensure_grad();
      const auto dy = out.grad();
      for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
    });
  }
  return out;
}

Tensor avgpool2d(const Tensor& input, std::size_t kernel, std::size_t stride) {
  const Shape os = pooled_shape(input, kernel, stride, "avgpool2d");
  const std::size_t planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = os[2], ow = os[3];
  const Real inv = Real(1) / static_cast<Real>(kernel * kernel);
  Tensor out(os);

  const Real* x = input.ptr();
  Real* y = out.ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    const Real* plane = x + p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        Real s = 0;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const Real* row = plane + (oy * stride + ky) * w + ox * stride;
          for (std::size_t kx = 0; kx < kernel; ++kx) s += row[kx];
        }
        y[(p * oh + oy) * ow + ox] = s * inv;
      }
    }
  }

  if (Graph* g = Graph::tracking({&input})) {
    g->record("avgpool2d", {input}, out, [input, out, kernel, stride, inv]() mutable {
      const std::size_t planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
      const std::size_t oh = out.dim(2), ow = out.dim(3);
      Real* dx = input.ensure_grad().data();
      const Real* dy = out.grad().data();
      for (std::size_t p = 0; p < planes; ++p) {
        Real* plane = dx + p * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const Real gv = dy[(p * oh + oy) * ow + ox] * inv;
            for (std::size_t ky = 0; ky < kernel; ++ky) {
              Real* row = plane + (oy * stride + ky) * w + ox * stride;
              for (std::size_t kx = 0; kx < kernel; ++kx) row[kx] += gv;
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace cgrn::ops
