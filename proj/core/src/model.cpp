#include "cgrn/model.hpp"

namespace cgrn {

namespace {

constexpr Real kInitStd = Real(0.02);

Tensor normal_tensor(std::mt19937_64& rng, Shape shape) {
  std::normal_distribution<double> dist(0.0, kInitStd);
  Tensor t(std::move(shape));
  for (Real& v : t.data()) v = static_cast<Real>(dist(rng));
  return t;
}

}  // namespace

Tensor ConvLayer::forward(const Tensor& x, ops::Mode mode, std::size_t groups) {
  Tensor h = transposed ? ops::deconv2d(x, weight, bias, stride) : ops::conv2d(x, weight, bias, stride, padding);
  if (batchnorm) h = ops::batchnorm2d(h, gamma, beta, bn, mode, groups);
  if (relu) h = ops::relu(h);
  return h;
}

ConvLayer Cgrn::make_conv(std::mt19937_64& rng, Slice slice, const std::string& name, std::size_t in,
                          std::size_t out, std::size_t kernel, std::size_t stride, std::size_t padding,
                          bool transposed, bool batchnorm, bool relu) {
  ConvLayer layer;
  layer.stride = stride;
  layer.padding = padding;
  layer.transposed = transposed;
  layer.batchnorm = batchnorm;
  layer.relu = relu;
  const Shape wshape = transposed ? Shape{in, out, kernel, kernel} : Shape{out, in, kernel, kernel};
  layer.weight = store_.add(slice, name + ".weight", normal_tensor(rng, wshape));
  if (batchnorm) {
    layer.gamma = store_.add(slice, name + ".bn.gamma", Tensor::full(Shape{out}, Real{1}));
    layer.beta = store_.add(slice, name + ".bn.beta", Tensor::zeros(Shape{out}));
    layer.bn = ops::BatchNormState::create(out);
    layer.bn.running_mean = store_.add_buffer(slice, name + ".bn.running_mean", layer.bn.running_mean);
    layer.bn.running_var = store_.add_buffer(slice, name + ".bn.running_var", layer.bn.running_var);
  } else {
    layer.bias = store_.add(slice, name + ".bias", Tensor::zeros(Shape{out}));
  }
  return layer;
}

Cgrn::Cgrn(NetworkConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const auto& c = config_;

  // Encoder: VGG-style 3x3 "same" convs.
  std::size_t in = 3;
  for (std::size_t s = 0; s < kFenStages; ++s) {
    const std::size_t ch = c.channels(kFenStageChannels[s]);
    for (std::size_t d = 0; d < kFenStageDepth[s]; ++d) {
      fen_.push_back(make_conv(rng, Slice::Encoder, "E_conv" + std::to_string(s + 1) + "_" + std::to_string(d + 1),
                               in, ch, 3, 1, 1, false, true, true));
      in = ch;
    }
  }

  ccn_weight_ = store_.add(Slice::Classifier, "C_fc.weight", normal_tensor(rng, Shape{c.ccn_feature_dim(), c.num_classes}));
  ccn_bias_ = store_.add(Slice::Classifier, "C_fc.bias", Tensor::zeros(Shape{c.num_classes}));

  // Generator: six stride-2 deconvs; skips from E_pool4..E_pool1 enter
  // G_deconv3..G_deconv6.
  in = c.channels(512) + c.font_embed_dim;
  for (std::size_t i = 0; i < 6; ++i) {
    if (i >= 2) in += c.channels(kFenStageChannels[5 - i]);
    const bool last = i == 5;
    const std::size_t out = last ? 3 : c.channels(kGgnChannels[i]);
    const bool bn = !last || c.final_activation == FinalActivation::Relu;
    const bool relu = !last || c.final_activation == FinalActivation::Relu;
    ggn_.push_back(make_conv(rng, Slice::Generator, "G_deconv" + std::to_string(i + 1), in, out, kGgnKernel, 2,
                             ops::deconv_padding(kGgnKernel), true, bn, relu));
    in = out;
  }
  font_table_ = store_.add_named(Slice::Generator, kFontEmbeddingPrefix + "table",
                                 normal_tensor(rng, Shape{c.num_fonts, c.font_embed_dim}));

  // Discriminator over 6-channel (x, t) pairs, 5x5 convs with padding 2.
  in = 6;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t ch = c.channels(kGdnChannels[i]);
    gdn_.push_back(make_conv(rng, Slice::Discriminator, "D_conv" + std::to_string(i + 1), in, ch, kGdnKernel,
                             kGdnStride[i], 2, false, true, true));
    in = ch;
  }
  gdn_weight_ = store_.add(Slice::Discriminator, "D_fc.weight", normal_tensor(rng, Shape{c.gdn_fc_dim(), 1}));
  gdn_bias_ = store_.add(Slice::Discriminator, "D_fc.bias", Tensor::zeros(Shape{1}));
}

void Cgrn::trace(const std::string& name, const Tensor& t) {
  if (trace_) trace_->push_back({name, t.shape()});
}

FeaturePyramid Cgrn::extract(const Tensor& x, ops::Mode mode) {
  const std::size_t size = config_.image_size;
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != size || x.dim(3) != size) {
    throw ShapeError("feature extractor expects [B,3," + std::to_string(size) + "," + std::to_string(size) +
                     "] input, got " + x.shape().str());
  }
  FeaturePyramid pyramid;
  Tensor h = x;
  std::size_t layer = 0;
  for (std::size_t s = 0; s < kFenStages; ++s) {
    for (std::size_t d = 0; d < kFenStageDepth[s]; ++d) {
      h = fen_[layer++].forward(h, mode);
      trace("E_conv" + std::to_string(s + 1) + "_" + std::to_string(d + 1), h);
    }
    h = ops::maxpool2d(h, kFenPool[s], kFenPool[s]);
    trace("E_pool" + std::to_string(s + 1), h);
    pyramid.taps[s] = h;
  }
  return pyramid;
}

Tensor Cgrn::classify(const FeaturePyramid& pyramid) {
  std::vector<Tensor> pooled;
  for (std::size_t s = 0; s < kFenStages; ++s) {
    const Tensor& tap = pyramid.taps[s];
    const std::size_t k = tap.dim(2);
    pooled.push_back(config_.ccn_pool == PoolKind::Avg ? ops::avgpool2d(tap, k, k) : ops::maxpool2d(tap, k, k));
    trace("C_pool" + std::to_string(s + 1), pooled.back());
  }
  Tensor features = ops::flatten(ops::concat(pooled, 1));
  trace("C_concat", features);
  Tensor logits = ops::linear(features, ccn_weight_, ccn_bias_);
  trace("C_fc", logits);
  return logits;
}

Tensor Cgrn::generate_slots(const FeaturePyramid& pyramid, const std::vector<std::size_t>& fonts, std::size_t slots,
                            ops::Mode mode) {
  const std::size_t batch = pyramid.batch();
  if (slots == 0 || fonts.size() != slots * batch) {
    throw ShapeError("generator: expected " + std::to_string(slots * batch) + " font indices, got " +
                     std::to_string(fonts.size()));
  }
  for (std::size_t f : fonts) {
    if (f >= config_.num_fonts) {
      throw ShapeError("generator: font index " + std::to_string(f) + " out of range (m = " +
                       std::to_string(config_.num_fonts) + ")");
    }
  }
  const std::size_t rows = slots * batch;
  Tensor z = ops::reshape(ops::embedding(font_table_, fonts), Shape{rows, config_.font_embed_dim, 1, 1});
  Tensor h = ops::concat({ops::repeat_batch(pyramid.taps[4], slots), z}, 1);
  trace("G_input", h);
  for (std::size_t i = 0; i < 6; ++i) {
    if (i >= 2) {
      h = ops::concat({h, ops::repeat_batch(pyramid.taps[5 - i], slots)}, 1);
      trace("G_skip" + std::to_string(6 - i), h);
    }
    h = ggn_[i].forward(h, mode, slots);
    trace("G_deconv" + std::to_string(i + 1), h);
  }
  if (config_.final_activation == FinalActivation::Sigmoid) h = ops::sigmoid(h);
  return h;
}

Tensor Cgrn::generate(const FeaturePyramid& pyramid, std::size_t font, ops::Mode mode) {
  return generate_slots(pyramid, std::vector<std::size_t>(pyramid.batch(), font), 1, mode);
}

std::vector<Tensor> Cgrn::generate_all(const FeaturePyramid& pyramid, ops::Mode mode) {
  const std::size_t batch = pyramid.batch(), m = config_.num_fonts;
  std::vector<std::size_t> fonts(m * batch);
  for (std::size_t j = 0; j < m; ++j) std::fill_n(fonts.begin() + static_cast<std::ptrdiff_t>(j * batch), batch, j);
  Tensor all = generate_slots(pyramid, fonts, m, mode);
  std::vector<Tensor> out;
  for (std::size_t j = 0; j < m; ++j) out.push_back(ops::slice_batch(all, j * batch, batch));
  return out;
}

Tensor Cgrn::discriminate(const Tensor& x, const Tensor& glyph, ops::Mode mode) {
  if (x.shape() != glyph.shape()) {
    throw ShapeError("discriminator: pair members differ in shape: " + x.shape().str() + " vs " + glyph.shape().str());
  }
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != config_.image_size || x.dim(3) != config_.image_size) {
    throw ShapeError("discriminator expects [N,3,64,64] images, got " + x.shape().str());
  }
  Tensor h = ops::concat({x, glyph}, 1);
  trace("D_input", h);
  for (std::size_t i = 0; i < gdn_.size(); ++i) {
    h = gdn_[i].forward(h, mode);
    trace("D_conv" + std::to_string(i + 1), h);
  }
  h = ops::flatten(h);
  trace("D_flatten", h);
  Tensor logit = ops::linear(h, gdn_weight_, gdn_bias_);
  trace("D_fc", logit);
  return logit;
}

}  // namespace cgrn
