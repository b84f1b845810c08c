#include "cgrn/losses.hpp"

#include <stdexcept>

#include "cgrn/ops.hpp"

namespace cgrn {

std::string to_string(PixelNorm n) { return n == PixelNorm::L1 ? "l1" : "l2"; }

PixelNorm parse_pixel_norm(const std::string& s) {
  if (s == "l1") return PixelNorm::L1;
  if (s == "l2") return PixelNorm::L2;
  throw std::invalid_argument("unknown pixel norm '" + s + "' (l1|l2)");
}

namespace {

Tensor reconstruction(const Tensor& a, const Tensor& b, PixelNorm norm) {
  return norm == PixelNorm::L1 ? ops::l1_loss(a, b) : ops::l2_loss(a, b);
}

}  // namespace

Tensor loss_pixel(const std::vector<Tensor>& generated, const std::vector<Tensor>& targets, PixelNorm norm) {
  if (generated.size() != targets.size()) {
    throw ShapeError("loss_pixel: " + std::to_string(generated.size()) + " generated glyphs for " +
                     std::to_string(targets.size()) + " targets");
  }
  if (generated.empty()) throw ShapeError("loss_pixel: no fonts");
  std::vector<Tensor> terms;
  for (std::size_t i = 0; i < generated.size(); ++i) terms.push_back(reconstruction(generated[i], targets[i], norm));
  return ops::weighted_sum(terms, std::vector<Real>(terms.size(), Real(1) / static_cast<Real>(terms.size())));
}

Tensor loss_pixel_stacked(const Tensor& generated, const Tensor& targets, PixelNorm norm) {
  return reconstruction(generated, targets, norm);
}

Tensor loss_cr(const Tensor& logits, const std::vector<int>& labels) { return ops::softmax_xent(logits, labels); }

Tensor loss_d(const Tensor& real_logits, const Tensor& fake_logits) {
  if (real_logits.shape() != fake_logits.shape()) {
    throw ShapeError("loss_d: real " + real_logits.shape().str() + " vs fake " + fake_logits.shape().str());
  }
  return ops::add(ops::bce_with_logits(real_logits, 1), ops::bce_with_logits(fake_logits, 0));
}

Tensor loss_g_nonsaturating(const Tensor& fake_logits) { return ops::bce_with_logits(fake_logits, 1); }

}  // namespace cgrn
