#include "cgrn/network_config.hpp"

#include <charconv>
#include <numeric>

namespace cgrn {

namespace {

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ShapeError("cannot parse " + what + " from '" + s + "'");
  return v;
}

}  // namespace

Rational Rational::parse(const std::string& text) {
  const auto slash = text.find('/');
  Rational r;
  if (slash == std::string::npos) {
    r.num = parse_size(text, "width multiplier");
    r.den = 1;
  } else {
    r.num = parse_size(text.substr(0, slash), "width multiplier");
    r.den = parse_size(text.substr(slash + 1), "width multiplier");
  }
  if (r.num == 0 || r.den == 0 || r.num > r.den) {
    throw ShapeError("width multiplier must lie in (0, 1], got '" + text + "'");
  }
  const std::size_t g = std::gcd(r.num, r.den);
  r.num /= g;
  r.den /= g;
  return r;
}

std::string Rational::str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

std::string to_string(Preset p) { return p == Preset::Paper ? "paper" : "desk"; }
std::string to_string(GanMode m) { return m == GanMode::Minimax ? "minimax" : "nonsaturating"; }
std::string to_string(FinalActivation a) { return a == FinalActivation::Sigmoid ? "sigmoid" : "relu"; }
std::string to_string(PoolKind k) { return k == PoolKind::Avg ? "avg" : "max"; }

Preset parse_preset(const std::string& s) {
  if (s == "paper") return Preset::Paper;
  if (s == "desk") return Preset::Desk;
  throw ShapeError("unknown preset '" + s + "' (expected paper|desk)");
}

GanMode parse_gan_mode(const std::string& s) {
  if (s == "minimax") return GanMode::Minimax;
  if (s == "nonsaturating") return GanMode::NonSaturating;
  throw ShapeError("unknown gan_mode '" + s + "' (expected minimax|nonsaturating)");
}

FinalActivation parse_final_activation(const std::string& s) {
  if (s == "sigmoid") return FinalActivation::Sigmoid;
  if (s == "relu") return FinalActivation::Relu;
  throw ShapeError("unknown final_activation '" + s + "' (expected sigmoid|relu)");
}

PoolKind parse_pool_kind(const std::string& s) {
  if (s == "avg") return PoolKind::Avg;
  if (s == "max") return PoolKind::Max;
  throw ShapeError("unknown pooling '" + s + "' (expected avg|max)");
}

NetworkConfig NetworkConfig::paper(std::size_t num_classes, std::size_t num_fonts) {
  NetworkConfig c;
  c.preset = Preset::Paper;
  c.width_mult = Rational{1, 1};
  c.num_classes = num_classes;
  c.num_fonts = num_fonts;
  return c;
}

NetworkConfig NetworkConfig::desk(std::size_t num_classes, std::size_t num_fonts) {
  NetworkConfig c;
  c.preset = Preset::Desk;
  c.width_mult = Rational{1, 8};
  c.num_classes = num_classes;
  c.num_fonts = num_fonts;
  return c;
}

std::size_t NetworkConfig::channels(std::size_t full_width) const {
  if ((full_width * width_mult.num) % width_mult.den != 0) {
    throw ShapeError("width multiplier " + width_mult.str() + " does not divide channel count " +
                     std::to_string(full_width));
  }
  return full_width * width_mult.num / width_mult.den;
}

void NetworkConfig::validate() const {
  if (width_mult.num == 0 || width_mult.den == 0 || width_mult.num > width_mult.den) {
    throw ShapeError("width multiplier must lie in (0, 1], got " + width_mult.str());
  }
  for (std::size_t c : kFenStageChannels) channels(c);
  for (std::size_t i = 0; i < 5; ++i) channels(kGgnChannels[i]);
  for (std::size_t c : kGdnChannels) channels(c);
  if (num_classes < 2) throw ShapeError("num_classes must be >= 2");
  if (num_fonts < 1) throw ShapeError("num_fonts must be >= 1");
  if (font_embed_dim < 1) throw ShapeError("font_embed_dim must be >= 1");
  if (image_size != 64) throw ShapeError("image_size must be 64 (the layer chain is fixed)");
}

std::size_t NetworkConfig::ccn_feature_dim() const {
  std::size_t total = 0;
  for (std::size_t c : kFenStageChannels) total += channels(c);
  return total;
}

std::size_t NetworkConfig::gdn_fc_dim() const { return 8 * 8 * channels(kGdnChannels[3]); }

std::vector<LayerShape> expected_shapes(const NetworkConfig& config, std::size_t batch) {
  config.validate();
  std::vector<LayerShape> out;
  std::size_t size = config.image_size;
  const std::size_t pairs = batch * config.num_fonts;

  for (std::size_t s = 0; s < kFenStages; ++s) {
    const std::size_t ch = config.channels(kFenStageChannels[s]);
    for (std::size_t d = 0; d < kFenStageDepth[s]; ++d) {
      out.push_back({"E_conv" + std::to_string(s + 1) + "_" + std::to_string(d + 1), Shape{batch, ch, size, size}});
    }
    size /= kFenPool[s];
    out.push_back({"E_pool" + std::to_string(s + 1), Shape{batch, ch, size, size}});
  }

  for (std::size_t s = 0; s < kFenStages; ++s) {
    out.push_back({"C_pool" + std::to_string(s + 1), Shape{batch, config.channels(kFenStageChannels[s]), 1, 1}});
  }
  out.push_back({"C_concat", Shape{batch, config.ccn_feature_dim()}});
  out.push_back({"C_fc", Shape{batch, config.num_classes}});

  out.push_back({"G_input", Shape{pairs, config.channels(512) + config.font_embed_dim, 1, 1}});
  size = 1;
  for (std::size_t i = 0; i < 6; ++i) {
    if (i >= 2) {
      // skip from E_pool(6 - i) at the current resolution
      const std::size_t skip = config.channels(kFenStageChannels[5 - i]);
      const std::size_t prev = config.channels(kGgnChannels[i - 1]);
      out.push_back({"G_skip" + std::to_string(6 - i), Shape{pairs, prev + skip, size, size}});
    }
    size *= 2;
    const std::size_t ch = i == 5 ? 3 : config.channels(kGgnChannels[i]);
    out.push_back({"G_deconv" + std::to_string(i + 1), Shape{pairs, ch, size, size}});
  }

  out.push_back({"D_input", Shape{pairs, 6, config.image_size, config.image_size}});
  size = config.image_size;
  for (std::size_t i = 0; i < 4; ++i) {
    size /= kGdnStride[i];
    out.push_back({"D_conv" + std::to_string(i + 1), Shape{pairs, config.channels(kGdnChannels[i]), size, size}});
  }
  out.push_back({"D_flatten", Shape{pairs, config.gdn_fc_dim()}});
  out.push_back({"D_fc", Shape{pairs, 1}});
  return out;
}

}  // namespace cgrn
