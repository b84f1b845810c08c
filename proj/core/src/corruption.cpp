#include "cgrn/corruption.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cgrn/rng.hpp"

namespace cgrn {

namespace {

// Portable draws: std distributions differ across standard libraries.
struct Draw {
  std::mt19937_64 rng;

  explicit Draw(std::uint64_t seed) : rng(seed) {}
  double unit() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  double symmetric(double r) { return uniform(-r, r); }
  bool chance(double p) { return unit() < p; }
  double normal() {
    const double u1 = 1.0 - unit(), u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

using Rgb = std::array<double, 3>;

double luma(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

// Colour with luminance near `target`: random chroma, then shifted into range.
Rgb colour_with_luma(Draw& d, double target) {
  Rgb c{d.unit(), d.unit(), d.unit()};
  const double shift = target - luma(c);
  for (double& v : c) v = std::clamp(v + shift, 0.0, 1.0);
  return c;
}

struct Canvas {
  std::size_t size;
  std::vector<double> px;  // planar RGB

  explicit Canvas(std::size_t n) : size(n), px(3 * n * n, 0.0) {}
  double& at(std::size_t c, std::size_t y, std::size_t x) { return px[(c * size + y) * size + x]; }
};

// Smooth value noise on a coarse lattice, bilinearly upsampled, in [0,1].
std::vector<double> value_noise(Draw& d, std::size_t size, std::size_t cells) {
  std::vector<double> lattice((cells + 1) * (cells + 1));
  for (double& v : lattice) v = d.unit();
  std::vector<double> out(size * size);
  for (std::size_t y = 0; y < size; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) * static_cast<double>(cells) / static_cast<double>(size);
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), cells - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < size; ++x) {
      const double fx = (static_cast<double>(x) + 0.5) * static_cast<double>(cells) / static_cast<double>(size);
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), cells - 1);
      const double tx = fx - static_cast<double>(x0);
      auto l = [&](std::size_t i, std::size_t j) { return lattice[i * (cells + 1) + j]; };
      const double top = (1 - tx) * l(y0, x0) + tx * l(y0, x0 + 1);
      const double bot = (1 - tx) * l(y0 + 1, x0) + tx * l(y0 + 1, x0 + 1);
      out[y * size + x] = (1 - ty) * top + ty * bot;
    }
  }
  return out;
}

constexpr std::uint64_t kTextureBankSeed = 0x7E87u;
constexpr int kTextureBankSize = 16;

// Texture `id` of the procedural bank: a fixed mixture of oriented waves,
// sampled at a per-scene offset.
std::vector<double> bank_texture(int id, double ox, double oy, std::size_t size) {
  Draw bank(mix_seed(kTextureBankSeed, {static_cast<std::uint64_t>(id)}));
  struct Wave {
    double kx, ky, phase, weight;
  };
  std::array<Wave, 3> waves;
  double total = 0;
  for (Wave& w : waves) {
    const double angle = bank.uniform(0, std::numbers::pi);
    const double freq = bank.uniform(0.08, 0.6);
    w = {freq * std::cos(angle), freq * std::sin(angle), bank.uniform(0, 2 * std::numbers::pi), bank.uniform(0.3, 1)};
    total += w.weight;
  }
  const bool checker = bank.chance(0.3);
  std::vector<double> out(size * size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) + ox, v = static_cast<double>(y) + oy;
      double s = 0;
      for (const Wave& w : waves) s += w.weight * std::sin(w.kx * u + w.ky * v + w.phase);
      s /= total;
      out[y * size + x] = checker ? (s > 0 ? 1.0 : 0.0) : 0.5 + 0.5 * s;
    }
  }
  return out;
}

void fill_background(Canvas& cv, Draw& d, Background mode, const Rgb& base, const Rgb& alt) {
  const std::size_t n = cv.size;
  std::vector<double> mix(n * n, 0.0);
  switch (mode) {
    case Background::Flat:
      break;
    case Background::Gradient: {
      const double angle = d.uniform(0, 2 * std::numbers::pi);
      const double gx = std::cos(angle), gy = std::sin(angle);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          const double u = (static_cast<double>(x) / static_cast<double>(n - 1) - 0.5) * gx +
                           (static_cast<double>(y) / static_cast<double>(n - 1) - 0.5) * gy;
          mix[y * n + x] = std::clamp(u + 0.5, 0.0, 1.0);
        }
      }
      break;
    }
    case Background::NoiseTexture: {
      const std::size_t cells = 2 + static_cast<std::size_t>(d.unit() * 10);
      mix = value_noise(d, n, cells);
      break;
    }
    case Background::ImagePatch: {
      const int id = static_cast<int>(d.unit() * kTextureBankSize);
      mix = bank_texture(id, d.uniform(0, 256), d.uniform(0, 256), n);
      break;
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n * n; ++i) cv.px[c * n * n + i] = (1 - mix[i]) * base[c] + mix[i] * alt[c];
  }
}

void gaussian_blur(Canvas& cv, double sigma) {
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= total;
  const int n = static_cast<int>(cv.size);
  std::vector<double> tmp(cv.px.size());
  auto clampi = [n](int i) { return std::clamp(i, 0, n - 1); };
  for (int c = 0; c < 3; ++c) {
    const double* src = cv.px.data() + c * n * n;
    double* mid = tmp.data() + c * n * n;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double s = 0;
        for (int i = -radius; i <= radius; ++i) s += k[i + radius] * src[y * n + clampi(x + i)];
        mid[y * n + x] = s;
      }
    }
    double* dst = cv.px.data() + c * n * n;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double s = 0;
        for (int i = -radius; i <= radius; ++i) s += k[i + radius] * mid[clampi(y + i) * n + x];
        dst[y * n + x] = s;
      }
    }
  }
}

struct Scene {
  Image image;
  double contrast;
};

Scene render_scene(int cls, const SynthFont& font, const CorruptionSpec& spec, std::uint64_t seed, std::size_t size) {
  Draw d(seed);
  const std::size_t plane = size * size;

  Rgb bg{1, 1, 1}, fg{0, 0, 0};
  if (spec.random_colors) {
    // Background and glyph luminances on opposite sides of a random split.
    const double bg_luma = d.unit();
    const bool glyph_darker = bg_luma >= spec.min_luma_gap && (bg_luma > 1 - spec.min_luma_gap || d.chance(0.5));
    const double fg_luma = glyph_darker ? d.uniform(0, bg_luma - spec.min_luma_gap)
                                        : d.uniform(bg_luma + spec.min_luma_gap, 1);
    bg = colour_with_luma(d, bg_luma);
    fg = colour_with_luma(d, fg_luma);
  }
  const Background mode = spec.backgrounds[static_cast<std::size_t>(d.unit() * static_cast<double>(spec.backgrounds.size()))];
  Rgb alt = bg;
  if (mode != Background::Flat) {
    // Second background tone on the background's side of the luminance split.
    const double shift = d.symmetric(0.5 * spec.min_luma_gap);
    for (std::size_t c = 0; c < 3; ++c) alt[c] = std::clamp(bg[c] + shift + d.symmetric(0.1), 0.0, 1.0);
  }

  Canvas cv(size);
  fill_background(cv, d, mode, bg, alt);

  GlyphPose pose;
  pose.rotation_deg = d.symmetric(spec.rotation_deg);
  pose.dx = d.symmetric(spec.translation_px);
  pose.dy = d.symmetric(spec.translation_px);
  pose.scale = 1 + d.symmetric(spec.scale_jitter);
  const auto cov = render_coverage(cls, font, size, pose);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) cv.px[c * plane + i] = cv.px[c * plane + i] * (1 - cov[i]) + fg[c] * cov[i];
  }

  if (d.chance(spec.occlusion_prob)) {
    const std::size_t w = 6 + static_cast<std::size_t>(d.unit() * static_cast<double>(size) / 4);
    const std::size_t h = 3 + static_cast<std::size_t>(d.unit() * static_cast<double>(size) / 8);
    const std::size_t x0 = static_cast<std::size_t>(d.unit() * static_cast<double>(size - w));
    const std::size_t y0 = static_cast<std::size_t>(d.unit() * static_cast<double>(size - h));
    const Rgb occ{d.unit(), d.unit(), d.unit()};
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = y0; y < y0 + h; ++y) {
        for (std::size_t x = x0; x < x0 + w; ++x) cv.at(c, y, x) = occ[c];
      }
    }
  }

  const double sigma = d.uniform(0, spec.blur_max);
  if (sigma >= 0.3) gaussian_blur(cv, sigma);

  const double gain = d.uniform(spec.contrast_min, spec.contrast_max);
  const double offset = d.symmetric(spec.brightness);
  if (gain != 1.0 || offset != 0.0) {
    for (double& v : cv.px) v = (v - 0.5) * gain + 0.5 + offset;
  }

  const double noise = d.uniform(0, spec.noise_sigma);
  if (noise > 0) {
    for (double& v : cv.px) v += noise * d.normal();
  }

  Image img(size, size);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) img.rgb[i * 3 + c] = to_byte(cv.px[c * plane + i]);
  }
  const double contrast = glyph_contrast(img, cov);
  return {std::move(img), contrast};
}

}  // namespace

std::string to_string(Background b) {
  switch (b) {
    case Background::Flat:
      return "flat";
    case Background::Gradient:
      return "gradient";
    case Background::NoiseTexture:
      return "noise";
    case Background::ImagePatch:
      return "patch";
  }
  return "?";
}

Background parse_background(const std::string& s) {
  for (Background b : {Background::Flat, Background::Gradient, Background::NoiseTexture, Background::ImagePatch}) {
    if (to_string(b) == s) return b;
  }
  throw std::invalid_argument("unknown background mode '" + s + "' (flat|gradient|noise|patch)");
}

CorruptionSpec CorruptionSpec::identity() {
  CorruptionSpec s;
  s.backgrounds = {Background::Flat};
  s.random_colors = false;
  s.blur_max = 0;
  s.brightness = 0;
  s.contrast_min = s.contrast_max = 1;
  s.rotation_deg = 0;
  s.translation_px = 0;
  s.scale_jitter = 0;
  s.occlusion_prob = 0;
  s.noise_sigma = 0;
  return s;
}

void CorruptionSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("corruption: " + what); };
  if (backgrounds.empty()) fail("at least one background mode required");
  if (min_luma_gap < 0 || min_luma_gap > 0.9) fail("min_luma_gap must lie in [0, 0.9]");
  if (blur_max < 0 || brightness < 0 || rotation_deg < 0 || translation_px < 0 || noise_sigma < 0) {
    fail("ranges must be non-negative");
  }
  if (contrast_min <= 0 || contrast_max < contrast_min) fail("need 0 < contrast_min <= contrast_max");
  if (scale_jitter < 0 || scale_jitter >= 0.5) fail("scale_jitter must lie in [0, 0.5)");
  if (occlusion_prob < 0 || occlusion_prob > 1) fail("occlusion_prob must lie in [0, 1]");
  if (contrast_floor < 0 || contrast_floor >= 1) fail("contrast_floor must lie in [0, 1)");
  if (max_attempts < 1) fail("max_attempts must be >= 1");
}

double glyph_contrast(const Image& img, const std::vector<double>& coverage) {
  double fg = 0, bg = 0;
  std::size_t nf = 0, nb = 0;
  for (std::size_t i = 0; i < coverage.size(); ++i) {
    const double l = (0.299 * img.rgb[i * 3] + 0.587 * img.rgb[i * 3 + 1] + 0.114 * img.rgb[i * 3 + 2]) / 255.0;
    if (coverage[i] >= 0.5) {
      fg += l;
      ++nf;
    } else if (coverage[i] < 0.05) {
      bg += l;
      ++nb;
    }
  }
  if (nf == 0 || nb == 0) return 0.0;
  return std::abs(fg / static_cast<double>(nf) - bg / static_cast<double>(nb));
}

Sample synth_scene(int cls, const SynthFont& font, const CorruptionSpec& spec, std::uint64_t seed,
                   const CanonicalSet& canon, std::size_t size) {
  if (cls < 0 || cls >= canon.classes()) {
    throw std::out_of_range("synth_scene: class " + std::to_string(cls) + " outside [0, " +
                            std::to_string(canon.classes()) + ")");
  }
  spec.validate();
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : mix_seed(seed, {static_cast<std::uint64_t>(attempt)});
    Scene scene = render_scene(cls, font, spec, mix_seed(s, {0}), size);
    if (scene.contrast < spec.contrast_floor) continue;
    Sample out;
    out.x = std::move(scene.image);
    out.label = cls;
    out.seed = s;
    out.scene_font = font.id;
    out.contrast = scene.contrast;
    out.above_floor = true;
    attach_targets(out, canon);
    std::mt19937_64 perm_rng(mix_seed(s, {1}));
    return shuffle_fonts(std::move(out), perm_rng);
  }
  throw DegenerateSampleError("class " + std::to_string(cls) + " font " + std::to_string(font.id) + " seed " +
                              std::to_string(seed) + ": contrast below " + std::to_string(spec.contrast_floor) +
                              " after " + std::to_string(spec.max_attempts) + " attempts");
}

}  // namespace cgrn
