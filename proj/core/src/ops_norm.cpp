#include <cmath>

#include "cgrn/graph.hpp"
#include "cgrn/ops.hpp"

namespace cgrn::ops {

BatchNormState BatchNormState::create(std::size_t channels) {
  BatchNormState s;
  s.running_mean = Tensor::zeros(Shape{channels});
  s.running_var = Tensor::full(Shape{channels}, Real{1});
  return s;
}

Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                   Mode mode, std::size_t groups) {
  if (input.rank() != 4) throw ShapeError("batchnorm2d: expected rank-4 input, got " + input.shape().str());
  const std::size_t batch = input.dim(0), channels = input.dim(1), plane = input.dim(2) * input.dim(3);
  const Shape cshape{channels};
  if (gamma.shape() != cshape || beta.shape() != cshape || state.running_mean.shape() != cshape ||
      state.running_var.shape() != cshape) {
    throw ShapeError("batchnorm2d: per-channel parameters must have shape " + cshape.str() + " for input " +
                     input.shape().str());
  }
  if (groups == 0 || batch % groups != 0) {
    throw ShapeError("batchnorm2d: batch " + std::to_string(batch) + " not divisible into " +
                     std::to_string(groups) + " groups");
  }
  const std::size_t group_batch = batch / groups;
  const std::size_t count = group_batch * plane;
  if (mode == Mode::Train && count < 2) {
    throw ShapeError("batchnorm2d: train mode needs at least 2 values per channel, input " + input.shape().str());
  }

  Tensor out(input.shape());
  const Real* x = input.ptr();
  Real* y = out.ptr();
  const Real* gm = gamma.ptr();
  const Real* bt = beta.ptr();

  // Per (group, channel): inverse std; normalized values are kept for backward.
  std::vector<Real> inv_std(groups * channels);
  std::vector<Real> xhat(input.numel());

  if (mode == Mode::Train) {
    std::vector<Real> mean_acc(channels, 0), var_acc(channels, 0);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t c = 0; c < channels; ++c) {
        Real s = 0;
        for (std::size_t n = g * group_batch; n < (g + 1) * group_batch; ++n) {
          const Real* p = x + (n * channels + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) s += p[i];
        }
        const Real mu = s / static_cast<Real>(count);
        Real ss = 0;
        for (std::size_t n = g * group_batch; n < (g + 1) * group_batch; ++n) {
          const Real* p = x + (n * channels + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const Real d = p[i] - mu;
            ss += d * d;
          }
        }
        const Real var = ss / static_cast<Real>(count);
        const Real is = Real(1) / std::sqrt(var + state.eps);
        inv_std[g * channels + c] = is;
        for (std::size_t n = g * group_batch; n < (g + 1) * group_batch; ++n) {
          const std::size_t base = (n * channels + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const Real xh = (x[base + i] - mu) * is;
            xhat[base + i] = xh;
            y[base + i] = gm[c] * xh + bt[c];
          }
        }
        mean_acc[c] += mu;
        var_acc[c] += var * static_cast<Real>(count) / static_cast<Real>(count - 1);
      }
    }
    Real* rm = state.running_mean.ptr();
    Real* rv = state.running_var.ptr();
    const Real keep = state.momentum;
    for (std::size_t c = 0; c < channels; ++c) {
      rm[c] = keep * rm[c] + (1 - keep) * mean_acc[c] / static_cast<Real>(groups);
      rv[c] = keep * rv[c] + (1 - keep) * var_acc[c] / static_cast<Real>(groups);
    }
  } else {
    const Real* rm = state.running_mean.ptr();
    const Real* rv = state.running_var.ptr();
    for (std::size_t c = 0; c < channels; ++c) {
      const Real is = Real(1) / std::sqrt(rv[c] + state.eps);
      for (std::size_t g = 0; g < groups; ++g) inv_std[g * channels + c] = is;
      for (std::size_t n = 0; n < batch; ++n) {
        const std::size_t base = (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const Real xh = (x[base + i] - rm[c]) * is;
          xhat[base + i] = xh;
          y[base + i] = gm[c] * xh + bt[c];
        }
      }
    }
  }

  if (Graph* g = Graph::tracking({&input, &gamma, &beta})) {
    g->record("batchnorm2d", {input, gamma, beta}, out,
              [input, gamma, beta, out, mode, groups, inv_std = std::move(inv_std), xhat = std::move(xhat)]() mutable {
                const std::size_t batch = input.dim(0), channels = input.dim(1), plane = input.dim(2) * input.dim(3);
                const std::size_t group_batch = batch / groups;
                const Real count = static_cast<Real>(group_batch * plane);
                const Real* dy = out.grad().data();
                const Real* gm = gamma.ptr();
                Real* dgamma = gamma.requires_grad() ? gamma.ensure_grad().data() : nullptr;
                Real* dbeta = beta.requires_grad() ? beta.ensure_grad().data() : nullptr;
                Real* dx = input.requires_grad() ? input.ensure_grad().data() : nullptr;
                for (std::size_t g = 0; g < groups; ++g) {
                  for (std::size_t c = 0; c < channels; ++c) {
                    Real sum_dy = 0, sum_dy_xhat = 0;
                    for (std::size_t n = g * group_batch; n < (g + 1) * group_batch; ++n) {
                      const std::size_t base = (n * channels + c) * plane;
                      for (std::size_t i = 0; i < plane; ++i) {
                        sum_dy += dy[base + i];
                        sum_dy_xhat += dy[base + i] * xhat[base + i];
                      }
                    }
                    if (dgamma) dgamma[c] += sum_dy_xhat;
                    if (dbeta) dbeta[c] += sum_dy;
                    if (!dx) continue;
                    const Real is = inv_std[g * channels + c];
                    for (std::size_t n = g * group_batch; n < (g + 1) * group_batch; ++n) {
                      const std::size_t base = (n * channels + c) * plane;
                      for (std::size_t i = 0; i < plane; ++i) {
                        if (mode == Mode::Train) {
                          dx[base + i] += gm[c] * is / count *
                                          (count * dy[base + i] - sum_dy - xhat[base + i] * sum_dy_xhat);
                        } else {
                          dx[base + i] += gm[c] * is * dy[base + i];
                        }
                      }
                    }
                  }
                }
              });
  }
  return out;
}

}  // namespace cgrn::ops
