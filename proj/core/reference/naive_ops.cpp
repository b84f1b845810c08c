#include "cgrn/reference/naive_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace cgrn::reference {

namespace {

double at(const Tensor& t, std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  return static_cast<double>(t.data()[offset4(t.shape(), n, c, h, w)]);
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t padding) {
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t oh = (h + 2 * padding - k) / stride + 1, ow = (wd + 2 * padding - k) / stride + 1;
  Tensor y(Shape{n, cout, oh, ow});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double s = b.defined() ? static_cast<double>(b.data()[co]) : 0.0;
          for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
                s += at(x, i, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) * at(w, co, ci, ky, kx);
              }
          y.data()[offset4(y.shape(), i, co, oy, ox)] = static_cast<Real>(s);
        }
  return y;
}

Tensor deconv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride) {
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(1), k = w.dim(2);
  const long pad = static_cast<long>((k - 1) / 2);
  const std::size_t oh = h * stride, ow = wd * stride;
  std::vector<double> acc(n * cout * oh * ow, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t iy = 0; iy < h; ++iy)
        for (std::size_t ix = 0; ix < wd; ++ix)
          for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long oy = static_cast<long>(iy * stride + ky) - pad;
                const long ox = static_cast<long>(ix * stride + kx) - pad;
                if (oy < 0 || ox < 0 || oy >= static_cast<long>(oh) || ox >= static_cast<long>(ow)) continue;
                acc[((i * cout + co) * oh + static_cast<std::size_t>(oy)) * ow + static_cast<std::size_t>(ox)] +=
                    at(x, i, ci, iy, ix) * at(w, ci, co, ky, kx);
              }
  Tensor y(Shape{n, cout, oh, ow});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t p = 0; p < oh * ow; ++p) {
        const std::size_t idx = (i * cout + co) * oh * ow + p;
        y.data()[idx] = static_cast<Real>(acc[idx] + (b.defined() ? static_cast<double>(b.data()[co]) : 0.0));
      }
  return y;
}

Tensor conv2d_input_grad(const Tensor& dy, const Tensor& w, const Shape& xs, std::size_t stride, std::size_t padding) {
  const std::size_t n = xs[0], cin = xs[1], h = xs[2], wd = xs[3];
  const std::size_t cout = w.dim(0), k = w.dim(2), oh = dy.dim(2), ow = dy.dim(3);
  std::vector<double> acc(xs.numel(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
          for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
                acc[offset4(xs, i, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix))] +=
                    at(dy, i, co, oy, ox) * at(w, co, ci, ky, kx);
              }
  Tensor g(xs);
  for (std::size_t i = 0; i < acc.size(); ++i) g.data()[i] = static_cast<Real>(acc[i]);
  return g;
}

Tensor maxpool2d(const Tensor& x, std::size_t k, std::size_t stride) {
  const std::size_t n = x.dim(0), c = x.dim(1), oh = (x.dim(2) - k) / stride + 1, ow = (x.dim(3) - k) / stride + 1;
  Tensor y(Shape{n, c, oh, ow});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double best = -INFINITY;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) best = std::max(best, at(x, i, ch, oy * stride + ky, ox * stride + kx));
          y.data()[offset4(y.shape(), i, ch, oy, ox)] = static_cast<Real>(best);
        }
  return y;
}

Tensor avgpool2d(const Tensor& x, std::size_t k, std::size_t stride) {
  const std::size_t n = x.dim(0), c = x.dim(1), oh = (x.dim(2) - k) / stride + 1, ow = (x.dim(3) - k) / stride + 1;
  Tensor y(Shape{n, c, oh, ow});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double s = 0;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) s += at(x, i, ch, oy * stride + ky, ox * stride + kx);
          y.data()[offset4(y.shape(), i, ch, oy, ox)] = static_cast<Real>(s / static_cast<double>(k * k));
        }
  return y;
}

Tensor batchnorm2d_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y(x.shape());
  const double count = static_cast<double>(n * h * w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < h; ++p)
        for (std::size_t q = 0; q < w; ++q) mean += at(x, i, ch, p, q);
    mean /= count;
    double var = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < h; ++p)
        for (std::size_t q = 0; q < w; ++q) var += (at(x, i, ch, p, q) - mean) * (at(x, i, ch, p, q) - mean);
    var /= count;
    const double g = static_cast<double>(gamma.data()[ch]), bt = static_cast<double>(beta.data()[ch]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < h; ++p)
        for (std::size_t q = 0; q < w; ++q)
          y.data()[offset4(x.shape(), i, ch, p, q)] =
              static_cast<Real>(g * (at(x, i, ch, p, q) - mean) / std::sqrt(var + eps) + bt);
  }
  return y;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(1);
  Tensor y(Shape{n, out});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < out; ++o) {
      double s = static_cast<double>(b.data()[o]);
      for (std::size_t j = 0; j < in; ++j) s += static_cast<double>(x.data()[i * in + j]) * w.data()[j * out + o];
      y.data()[i * out + o] = static_cast<Real>(s);
    }
  return y;
}

double softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t n = logits.dim(0), l = logits.dim(1);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < l; ++j) mx = std::max(mx, -static_cast<double>(logits.data()[i * l + j]));
    std::vector<double> p(l);
    double z = 0;
    for (std::size_t j = 0; j < l; ++j) z += p[j] = std::exp(-static_cast<double>(logits.data()[i * l + j]) - mx);
    total += -std::log(p[static_cast<std::size_t>(labels[i])] / z);
  }
  return total / static_cast<double>(n);
}

double l1(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  return s / static_cast<double>(a.numel());
}

double discriminator_loss(const Tensor& real, const Tensor& fake) {
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double r = 0, f = 0;
  for (Real v : real.data()) r += -std::log(sig(static_cast<double>(v)));
  for (Real v : fake.data()) f += -std::log(1.0 - sig(static_cast<double>(v)));
  return r / static_cast<double>(real.numel()) + f / static_cast<double>(fake.numel());
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("dot: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += static_cast<double>(a.data()[i]) * b.data()[i];
  return s;
}

}  // namespace cgrn::reference
