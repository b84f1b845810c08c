#include "cgrn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace cgrn {

Adam::Adam(const std::vector<NamedTensor>& params, AdamConfig config) : config_(config) {
  slots_.reserve(params.size());
  for (const auto& p : params) {
    slots_.push_back(Slot{p.name, p.tensor, Tensor::zeros(p.tensor.shape()), Tensor::zeros(p.tensor.shape())});
  }
}

void Adam::step() {
  for (const Slot& s : slots_) {
    if (!s.param.has_grad()) throw std::logic_error("adam: parameter '" + s.name + "' has no gradient");
  }
  ++t_;
  const Real b1 = config_.beta1, b2 = config_.beta2;
  const Real correction1 = 1 - std::pow(b1, static_cast<Real>(t_));
  const Real correction2 = 1 - std::pow(b2, static_cast<Real>(t_));
  for (Slot& s : slots_) {
    auto p = s.param.data();
    auto g = s.param.grad();
    auto m = s.m.data();
    auto v = s.v.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const Real m_hat = m[i] / correction1;
      const Real v_hat = v[i] / correction2;
      p[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
    s.param.zero_grad();
  }
}

void Adam::zero_grad() {
  for (Slot& s : slots_) s.param.zero_grad();
}

}  // namespace cgrn
