#include <cmath>

#include "cgrn/graph.hpp"
#include "cgrn/ops.hpp"

namespace cgrn::ops {

namespace {

void check_logits(const Tensor& logits, const char* op) {
  if (logits.rank() != 2) throw ShapeError(std::string(op) + ": logits must be [B,L], got " + logits.shape().str());
}

// Row-wise softmax of -logits, max-subtracted.
std::vector<Real> negated_softmax_rows(const Tensor& logits) {
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  std::vector<Real> p(batch * classes);
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* z = logits.ptr() + b * classes;
    Real mx = -z[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, -z[j]);
    Real denom = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      p[b * classes + j] = std::exp(-z[j] - mx);
      denom += p[b * classes + j];
    }
    for (std::size_t j = 0; j < classes; ++j) p[b * classes + j] /= denom;
  }
  return p;
}

// softplus(v) = log(1 + exp(v)).
Real softplus(Real v) { return std::max(v, Real{0}) + std::log1p(std::exp(-std::abs(v))); }

}  // namespace

Tensor negated_softmax(const Tensor& logits) {
  check_logits(logits, "negated_softmax");
  return Tensor(logits.shape(), negated_softmax_rows(logits));
}

Tensor softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
  check_logits(logits, "softmax_xent");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) + " labels for batch " + std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ShapeError("softmax_xent: label " + std::to_string(y) + " out of range [0, " + std::to_string(classes) + ")");
    }
  }
  Real total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* z = logits.ptr() + b * classes;
    Real mx = -z[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, -z[j]);
    Real s = 0;
    for (std::size_t j = 0; j < classes; ++j) s += std::exp(-z[j] - mx);
    const Real log_partition = mx + std::log(s);
    total += log_partition + z[static_cast<std::size_t>(labels[b])];
  }
  Tensor out = Tensor::scalar(total / static_cast<Real>(batch));

  if (Graph* g = Graph::tracking({&logits})) {
    g->record("softmax_xent", {logits}, out, [logits, labels, out]() mutable {
      const std::size_t batch = logits.dim(0), classes = logits.dim(1);
      const std::vector<Real> p = negated_softmax_rows(logits);
      const Real scale = out.grad()[0] / static_cast<Real>(batch);
      auto dz = logits.ensure_grad();
      // d/dC_j of [log sum exp(-C) + C_y] = 1[j == y] - p_j
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < classes; ++j) {
          const Real onehot = static_cast<std::size_t>(labels[b]) == j ? Real{1} : Real{0};
          dz[b * classes + j] += scale * (onehot - p[b * classes + j]);
        }
      }
    });
  }
  return out;
}

Tensor l1_loss(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("l1_loss: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Real s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(a.ptr()[i] - b.ptr()[i]);
  const Real n = static_cast<Real>(a.numel());
  Tensor out = Tensor::scalar(s / n);
  if (Graph* g = Graph::tracking({&a, &b})) {
    g->record("l1_loss", {a, b}, out, [a, b, out, n]() mutable {
      const Real dy = out.grad()[0] / n;
      Real* da = a.requires_grad() ? a.ensure_grad().data() : nullptr;
      Real* db = b.requires_grad() ? b.ensure_grad().data() : nullptr;
      for (std::size_t i = 0; i < a.numel(); ++i) {
        const Real d = a.ptr()[i] - b.ptr()[i];
        const Real sgn = d > 0 ? Real{1} : (d < 0 ? Real{-1} : Real{0});
        if (da) da[i] += sgn * dy;
        if (db) db[i] -= sgn * dy;
      }
    });
  }
  return out;
}

Tensor l2_loss(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("l2_loss: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Real s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const Real d = a.ptr()[i] - b.ptr()[i];
    s += d * d;
  }
  const Real n = static_cast<Real>(a.numel());
  Tensor out = Tensor::scalar(s / n);
  if (Graph* g = Graph::tracking({&a, &b})) {
    g->record("l2_loss", {a, b}, out, [a, b, out, n]() mutable {
      const Real dy = out.grad()[0] / n;
      Real* da = a.requires_grad() ? a.ensure_grad().data() : nullptr;
      Real* db = b.requires_grad() ? b.ensure_grad().data() : nullptr;
      for (std::size_t i = 0; i < a.numel(); ++i) {
        const Real d = 2 * (a.ptr()[i] - b.ptr()[i]) * dy;
        if (da) da[i] += d;
        if (db) db[i] -= d;
      }
    });
  }
  return out;
}

Tensor bce_with_logits(const Tensor& logits, Real target) {
  // -[y log s(x) + (1-y) log(1-s(x))] = softplus(x) - y x
  Real s = 0;
  for (Real v : logits.data()) s += softplus(v) - target * v;
  const Real n = static_cast<Real>(logits.numel());
  Tensor out = Tensor::scalar(s / n);
  if (Graph* g = Graph::tracking({&logits})) {
    g->record("bce_with_logits", {logits}, out, [logits, out, target, n]() mutable {
      const Real dy = out.grad()[0] / n;
      auto dx = logits.ensure_grad();
      const auto xs = logits.data();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        const Real v = xs[i];
        const Real sig = v >= 0 ? Real(1) / (1 + std::exp(-v)) : std::exp(v) / (1 + std::exp(v));
        dx[i] += (sig - target) * dy;
      }
    });
  }
  return out;
}

}  // namespace cgrn::ops
