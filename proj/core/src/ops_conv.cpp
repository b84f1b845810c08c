#include <algorithm>

#include "cgrn/graph.hpp"
#include "cgrn/ops.hpp"
#include "eigen_maps.hpp"

namespace cgrn::ops {

namespace {

using detail::as_matrix;

// Geometry of a strided window sweep: an image [channels, height, width] is
// unfolded into columns [channels*k*k, out_h*out_w]. Batches are processed as
// one long column axis (sample-major) in tiles of a few hundred columns so the
// unfolded tile stays in cache.
struct Unfold {
  std::size_t channels, height, width;
  std::size_t k, stride, pad;
  std::size_t out_h, out_w;

  std::size_t rows() const { return channels * k * k; }
  std::size_t cols() const { return out_h * out_w; }
};

constexpr std::size_t kTileBytes = 160 * 1024;
constexpr std::size_t kTileAlign = 16;

// Tiles either hold whole samples or split one sample at fixed offsets, and
// every product runs at the same padded width, so a sample's result does not
// depend on the other samples in the batch.
struct Tiling {
  std::size_t width = 0;
  std::vector<std::pair<std::size_t, std::size_t>> tiles;  // (first position, count)
};

Tiling plan_tiles(std::size_t rows, std::size_t cols, std::size_t batch) {
  const std::size_t target =
      std::max<std::size_t>(64, kTileBytes / (sizeof(Real) * std::max<std::size_t>(rows, 1)));
  auto align = [](std::size_t n) { return (n + kTileAlign - 1) / kTileAlign * kTileAlign; };
  Tiling t;
  if (cols <= target) {
    const std::size_t per = target / cols;
    t.width = align(per * cols);
    for (std::size_t n = 0; n < batch; n += per) t.tiles.emplace_back(n * cols, std::min(per, batch - n) * cols);
  } else {
    const std::size_t chunks = (cols + target - 1) / target, len = (cols + chunks - 1) / chunks;
    t.width = align(len);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t c = 0; c < cols; c += len) t.tiles.emplace_back(n * cols + c, std::min(len, cols - c));
    }
  }
  return t;
}

// Zeroes columns [used, width) of a [rows, width] tile.
void clear_tail(Real* tile, std::size_t rows, std::size_t used, std::size_t width) {
  if (used == width) return;
  for (std::size_t r = 0; r < rows; ++r) std::fill(tile + r * width + used, tile + (r + 1) * width, Real{0});
}

// A run of tile columns that lie on one output row of one sample.
struct Segment {
  std::size_t n, oy, ox, len, t;
};

std::vector<Segment> segments(const Unfold& u, std::size_t p0, std::size_t count) {
  std::vector<Segment> out;
  const std::size_t cols = u.cols();
  std::size_t p = p0, t = 0;
  while (t < count) {
    const std::size_t n = p / cols, pos = p % cols, oy = pos / u.out_w, ox = pos % u.out_w;
    const std::size_t len = std::min(u.out_w - ox, count - t);
    out.push_back({n, oy, ox, len, t});
    p += len;
    t += len;
  }
  return out;
}

// Output columns ox in [lo, hi) read an in-range input column for tap kx.
void valid_range(const Unfold& u, std::size_t kx, std::size_t& lo, std::size_t& hi) {
  lo = u.pad > kx ? (u.pad - kx + u.stride - 1) / u.stride : 0;
  const std::size_t limit = u.width + u.pad;  // ix < width  <=>  ox*stride + kx < width + pad
  hi = limit > kx ? (limit - kx - 1) / u.stride + 1 : 0;
  hi = std::min(hi, u.out_w);
  lo = std::min(lo, hi);
}

// col[r, t] = image value under tap r for tile column t (zero outside).
void im2col_tile(const Real* img, const Unfold& u, const std::vector<Segment>& segs, std::size_t width, Real* col) {
  const std::size_t plane = u.height * u.width, image = u.channels * plane;
  for (std::size_t c = 0; c < u.channels; ++c) {
    for (std::size_t ky = 0; ky < u.k; ++ky) {
      for (std::size_t kx = 0; kx < u.k; ++kx) {
        Real* row = col + ((c * u.k + ky) * u.k + kx) * width;
        std::size_t lo, hi;
        valid_range(u, kx, lo, hi);
        for (const Segment& s : segs) {
          Real* dst = row + s.t;
          const auto iy = static_cast<std::ptrdiff_t>(s.oy * u.stride + ky) - static_cast<std::ptrdiff_t>(u.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(u.height)) {
            std::fill(dst, dst + s.len, Real{0});
            continue;
          }
          const Real* src = img + s.n * image + c * plane + static_cast<std::size_t>(iy) * u.width;
          const std::size_t a = std::clamp(lo, s.ox, s.ox + s.len), b = std::clamp(hi, a, s.ox + s.len);
          std::fill(dst, dst + (a - s.ox), Real{0});
          const std::size_t off = kx - u.pad;  // wraps; only used with ox*stride added
          if (u.stride == 1) {
            for (std::size_t ox = a; ox < b; ++ox) dst[ox - s.ox] = src[ox + off];
          } else {
            for (std::size_t ox = a; ox < b; ++ox) dst[ox - s.ox] = src[ox * u.stride + off];
          }
          std::fill(dst + (b - s.ox), dst + s.len, Real{0});
        }
      }
    }
  }
}

// Adjoint of im2col_tile: accumulates every tile column back onto the image.
void col2im_tile(const Real* col, const Unfold& u, const std::vector<Segment>& segs, std::size_t width, Real* img) {
  const std::size_t plane = u.height * u.width, image = u.channels * plane;
  for (std::size_t c = 0; c < u.channels; ++c) {
    for (std::size_t ky = 0; ky < u.k; ++ky) {
      for (std::size_t kx = 0; kx < u.k; ++kx) {
        const Real* row = col + ((c * u.k + ky) * u.k + kx) * width;
        std::size_t lo, hi;
        valid_range(u, kx, lo, hi);
        for (const Segment& s : segs) {
          const auto iy = static_cast<std::ptrdiff_t>(s.oy * u.stride + ky) - static_cast<std::ptrdiff_t>(u.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(u.height)) continue;
          const Real* src = row + s.t;
          Real* dst = img + s.n * image + c * plane + static_cast<std::size_t>(iy) * u.width;
          const std::size_t a = std::clamp(lo, s.ox, s.ox + s.len), b = std::clamp(hi, a, s.ox + s.len);
          const std::size_t off = kx - u.pad;
          if (u.stride == 1) {
            for (std::size_t ox = a; ox < b; ++ox) dst[ox + off] += src[ox - s.ox];
          } else {
            for (std::size_t ox = a; ox < b; ++ox) dst[ox * u.stride + off] += src[ox - s.ox];
          }
        }
      }
    }
  }
}

// Column-side tensors [N, channels, cols] <-> tile matrices [channels, width].
void gather_tile(const Real* x, std::size_t channels, std::size_t cols, const std::vector<Segment>& segs,
                 const Unfold& u, std::size_t width, Real* out) {
  for (const Segment& s : segs) {
    const std::size_t pos = s.oy * u.out_w + s.ox;
    for (std::size_t c = 0; c < channels; ++c) {
      const Real* src = x + (s.n * channels + c) * cols + pos;
      std::copy(src, src + s.len, out + c * width + s.t);
    }
  }
}

void scatter_tile(const Real* in, std::size_t channels, std::size_t cols, const std::vector<Segment>& segs,
                  const Unfold& u, std::size_t width, Real* x, bool accumulate) {
  for (const Segment& s : segs) {
    const std::size_t pos = s.oy * u.out_w + s.ox;
    for (std::size_t c = 0; c < channels; ++c) {
      const Real* src = in + c * width + s.t;
      Real* dst = x + (s.n * channels + c) * cols + pos;
      if (accumulate) {
        for (std::size_t i = 0; i < s.len; ++i) dst[i] += src[i];
      } else {
        std::copy(src, src + s.len, dst);
      }
    }
  }
}

void check_bias(const Tensor& bias, std::size_t channels, const char* op) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != channels)) {
    throw ShapeError(std::string(op) + ": bias shape " + bias.shape().str() + " does not match " +
                     std::to_string(channels) + " output channels");
  }
}

void add_bias(Real* out, const Tensor& bias, std::size_t batch, std::size_t channels, std::size_t plane) {
  if (!bias.defined()) return;
  const Real* b = bias.ptr();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      Real* p = out + (n * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += b[c];
    }
  }
}

void accumulate_bias_grad(Tensor bias, const Real* dout, std::size_t batch, std::size_t channels,
                          std::size_t plane) {
  if (!bias.defined() || !bias.requires_grad()) return;
  auto db = bias.ensure_grad();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const Real* p = dout + (n * channels + c) * plane;
      Real s = 0;
      for (std::size_t i = 0; i < plane; ++i) s += p[i];
      db[c] += s;
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  if (input.rank() != 4 || kernel.rank() != 4) {
    throw ShapeError("conv2d: expected rank-4 input and kernel, got " + input.shape().str() + " and " +
                     kernel.shape().str());
  }
  if (kernel.dim(1) != input.dim(1)) {
    throw ShapeError("conv2d: input " + input.shape().str() + " has " + std::to_string(input.dim(1)) +
                     " channels but kernel " + kernel.shape().str() + " expects " +
                     std::to_string(kernel.dim(1)));
  }
  if (kernel.dim(2) != kernel.dim(3)) throw ShapeError("conv2d: kernel must be square, got " + kernel.shape().str());
  if (stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  const std::size_t k = kernel.dim(2);
  const std::size_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t cout = kernel.dim(0);
  if (h + 2 * padding < k || w + 2 * padding < k) {
    throw ShapeError("conv2d: kernel " + kernel.shape().str() + " larger than padded input " + input.shape().str());
  }
  check_bias(bias, cout, "conv2d");

  const Unfold u{cin, h, w, k, stride, padding, (h + 2 * padding - k) / stride + 1,
                 (w + 2 * padding - k) / stride + 1};
  const std::size_t rows = u.rows(), cols = u.cols();
  Tensor out(Shape{batch, cout, u.out_h, u.out_w});

  const Tiling plan = plan_tiles(rows, cols, batch);
  const std::size_t W = plan.width;
  std::vector<Real> col(rows * W), acc(cout * W);
  const auto wmat = as_matrix(kernel.ptr(), cout, rows);
  for (const auto& [p0, t] : plan.tiles) {
    const auto segs = segments(u, p0, t);
    im2col_tile(input.ptr(), u, segs, W, col.data());
    clear_tail(col.data(), rows, t, W);
    as_matrix(acc.data(), cout, W).noalias() = wmat * as_matrix(col.data(), rows, W);
    scatter_tile(acc.data(), cout, cols, segs, u, W, out.ptr(), false);
  }
  add_bias(out.ptr(), bias, batch, cout, cols);

  if (Graph* g = Graph::tracking({&input, &kernel, &bias})) {
    g->record("conv2d", {input, kernel, bias}, out, [input, kernel, bias, out, u]() mutable {
      const std::size_t batch = input.dim(0), cout = kernel.dim(0);
      const std::size_t rows = u.rows(), cols = u.cols();
      const Real* dout = out.grad().data();
      accumulate_bias_grad(bias, dout, batch, cout, cols);
      const bool want_w = kernel.requires_grad(), want_x = input.requires_grad();
      if (!want_w && !want_x) return;
      const Tiling plan = plan_tiles(rows, cols, batch);
      const std::size_t W = plan.width;
      std::vector<Real> col(rows * W), dtile(cout * W);
      Real* dw = want_w ? kernel.ensure_grad().data() : nullptr;
      Real* dx = want_x ? input.ensure_grad().data() : nullptr;
      const auto wmat = as_matrix(kernel.ptr(), cout, rows);
      for (const auto& [p0, t] : plan.tiles) {
        const auto segs = segments(u, p0, t);
        gather_tile(dout, cout, cols, segs, u, W, dtile.data());
        clear_tail(dtile.data(), cout, t, W);
        const auto dmat = as_matrix(dtile.data(), cout, W);
        if (want_w) {
          im2col_tile(input.ptr(), u, segs, W, col.data());
          clear_tail(col.data(), rows, t, W);
          as_matrix(dw, cout, rows).noalias() += dmat * as_matrix(col.data(), rows, W).transpose();
        }
        if (want_x) {
          as_matrix(col.data(), rows, W).noalias() = wmat.transpose() * dmat;
          col2im_tile(col.data(), u, segs, W, dx);
        }
      }
    });
  }
  return out;
}

std::size_t deconv_padding(std::size_t kernel) { return (kernel - 1) / 2; }

std::size_t deconv_output_padding(std::size_t kernel, std::size_t stride) {
  // Output extent of a transposed conv: (H - 1) * s - 2p + k + op == s * H.
  const auto op = static_cast<std::ptrdiff_t>(stride) + 2 * static_cast<std::ptrdiff_t>(deconv_padding(kernel)) -
                  static_cast<std::ptrdiff_t>(kernel);
  if (op < 0 || op >= static_cast<std::ptrdiff_t>(stride)) {
    throw ShapeError("deconv2d: kernel size " + std::to_string(kernel) + " cannot scale extent by stride " +
                     std::to_string(stride));
  }
  return static_cast<std::size_t>(op);
}

Tensor deconv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride) {
  if (input.rank() != 4 || kernel.rank() != 4) {
    throw ShapeError("deconv2d: expected rank-4 input and kernel, got " + input.shape().str() + " and " +
                     kernel.shape().str());
  }
  if (kernel.dim(0) != input.dim(1)) {
    throw ShapeError("deconv2d: input " + input.shape().str() + " has " + std::to_string(input.dim(1)) +
                     " channels but kernel " + kernel.shape().str() + " expects " +
                     std::to_string(kernel.dim(0)));
  }
  if (kernel.dim(2) != kernel.dim(3)) throw ShapeError("deconv2d: kernel must be square, got " + kernel.shape().str());
  if (stride != 1 && stride != 2) throw ShapeError("deconv2d: stride must be 1 or 2");
  const std::size_t k = kernel.dim(2);
  deconv_output_padding(k, stride);  // validates the geometry
  const std::size_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t cout = kernel.dim(1);
  check_bias(bias, cout, "deconv2d");

  // The output image is the "image side" of the unfold; the input is the column side.
  const Unfold u{cout, h * stride, w * stride, k, stride, deconv_padding(k), h, w};
  const std::size_t rows = u.rows(), cols = u.cols();
  Tensor out(Shape{batch, cout, u.height, u.width});

  const Tiling plan = plan_tiles(rows, cols, batch);
  const std::size_t W = plan.width;
  std::vector<Real> col(rows * W), xtile(cin * W);
  const auto wmat = as_matrix(kernel.ptr(), cin, rows);
  for (const auto& [p0, t] : plan.tiles) {
    const auto segs = segments(u, p0, t);
    gather_tile(input.ptr(), cin, cols, segs, u, W, xtile.data());
    clear_tail(xtile.data(), cin, t, W);
    as_matrix(col.data(), rows, W).noalias() = wmat.transpose() * as_matrix(xtile.data(), cin, W);
    col2im_tile(col.data(), u, segs, W, out.ptr());
  }
  add_bias(out.ptr(), bias, batch, cout, u.height * u.width);

  if (Graph* g = Graph::tracking({&input, &kernel, &bias})) {
    g->record("deconv2d", {input, kernel, bias}, out, [input, kernel, bias, out, u]() mutable {
      const std::size_t batch = input.dim(0), cin = input.dim(1), cout = u.channels;
      const std::size_t rows = u.rows(), cols = u.cols();
      const Real* dout = out.grad().data();
      accumulate_bias_grad(bias, dout, batch, cout, u.height * u.width);
      const bool want_w = kernel.requires_grad(), want_x = input.requires_grad();
      if (!want_w && !want_x) return;
      const Tiling plan = plan_tiles(rows, cols, batch);
      const std::size_t W = plan.width;
      std::vector<Real> col(rows * W), xtile(cin * W);
      Real* dx = want_x ? input.ensure_grad().data() : nullptr;
      Real* dw = want_w ? kernel.ensure_grad().data() : nullptr;
      const auto wmat = as_matrix(kernel.ptr(), cin, rows);
      for (const auto& [p0, t] : plan.tiles) {
        const auto segs = segments(u, p0, t);
        im2col_tile(dout, u, segs, W, col.data());
        clear_tail(col.data(), rows, t, W);
        const auto dcol = as_matrix(col.data(), rows, W);
        if (want_x) {
          as_matrix(xtile.data(), cin, W).noalias() = wmat * dcol;
          scatter_tile(xtile.data(), cin, cols, segs, u, W, dx, true);
        }
        if (want_w) {
          gather_tile(input.ptr(), cin, cols, segs, u, W, xtile.data());
          clear_tail(xtile.data(), cin, t, W);
          as_matrix(dw, cin, rows).noalias() += as_matrix(xtile.data(), cin, W) * dcol.transpose();
        }
      }
    });
  }
  return out;
}

}  // namespace cgrn::ops
