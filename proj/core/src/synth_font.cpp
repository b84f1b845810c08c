#include "cgrn/synth_font.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cgrn/glyphs.hpp"

namespace cgrn {

namespace {

// clang-format off
const std::array<SynthFont, 10> kCatalog = {{
  {0, "sans",      5.0,  0.00, 1.00, false, 1.0},
  {1, "slab",      4.0,  0.00, 0.92, true,  0.0},
  {2, "light",     2.6,  0.00, 1.05, false, 0.5},
  {3, "oblique",   4.2,  0.18, 0.96, false, 1.0},
  {4, "heavy",     7.0,  0.00, 0.95, false, 0.0},
  {5, "book",      3.0,  0.08, 1.08, true,  0.3},
  {6, "italic",    5.6,  0.22, 0.90, false, 1.0},
  {7, "backslant", 4.6, -0.15, 1.00, true,  0.7},
  {8, "wide",      3.6,  0.10, 0.85, true,  1.0},
  {9, "hairline",  1.8, -0.05, 1.00, false, 1.0},
}};
// clang-format on

constexpr double kPitch = 0.105;       // cell pitch as a fraction of the canvas
constexpr double kSerifHalf = 0.45;    // serif half-length in cells

struct Stroke {
  double ax, ay, bx, by;
};

double stroke_distance(const Stroke& s, double px, double py, double rounding) {
  const double ex = s.bx - s.ax, ey = s.by - s.ay;
  const double len = std::hypot(ex, ey);
  if (len < 1e-12) {
    const double dxp = std::abs(px - s.ax), dyp = std::abs(py - s.ay);
    return rounding * std::hypot(dxp, dyp) + (1 - rounding) * std::max(dxp, dyp);
  }
  const double ux = ex / len, uy = ey / len;
  const double rx = px - s.ax, ry = py - s.ay;
  const double t = rx * ux + ry * uy;
  const double perp = std::abs(-rx * uy + ry * ux);
  const double along = std::max(0.0, std::abs(t - len / 2) - len / 2);
  const double round = std::hypot(perp, along);
  const double square = std::max(perp, along);
  return rounding * round + (1 - rounding) * square;
}

}  // namespace

int SynthFont::catalog_size() { return static_cast<int>(kCatalog.size()); }

SynthFont SynthFont::catalog(int id) {
  if (id < 0 || id >= catalog_size()) {
    throw std::out_of_range("font id " + std::to_string(id) + " outside [0, " + std::to_string(catalog_size()) + ")");
  }
  return kCatalog[static_cast<std::size_t>(id)];
}

std::vector<double> render_coverage(int cls, const SynthFont& font, std::size_t size, const GlyphPose& pose) {
  const double unit = static_cast<double>(size) / 64.0;
  const double pitch = kPitch * static_cast<double>(size) * font.scale * pose.scale;
  const double centre = static_cast<double>(size) / 2.0;
  const double theta = pose.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);

  auto place = [&](double gx, double gy) {
    // Cell grid centred on (2, 3); y grows downward.
    const double lx = (gx - 2.0) * pitch + font.shear * (3.0 - gy) * pitch;
    const double ly = (gy - 3.0) * pitch;
    return std::array<double, 2>{centre + cs * lx - sn * ly + pose.dx * unit, centre + sn * lx + cs * ly + pose.dy * unit};
  };

  std::vector<Stroke> strokes;
  for (const Segment& s : glyph_skeleton(cls)) {
    const auto a = place(s.x0, s.y0), b = place(s.x1, s.y1);
    strokes.push_back({a[0], a[1], b[0], b[1]});
  }
  if (font.serif) {
    for (const Terminal& t : glyph_terminals(cls)) {
      // Crossbar perpendicular to the stroke at its free end.
      const double nx = -t.dy, ny = t.dx;
      const auto a = place(t.x + nx * kSerifHalf, t.y + ny * kSerifHalf);
      const auto b = place(t.x - nx * kSerifHalf, t.y - ny * kSerifHalf);
      strokes.push_back({a[0], a[1], b[0], b[1]});
    }
  }

  const double half_width = font.stroke_width * unit * pose.scale / 2.0;
  std::vector<double> cov(size * size, 0.0);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      double d = std::numeric_limits<double>::infinity();
      for (const Stroke& s : strokes) d = std::min(d, stroke_distance(s, px, py, font.corner_rounding));
      cov[y * size + x] = std::clamp(half_width - d + 0.5, 0.0, 1.0);
    }
  }
  return cov;
}

Image render_canonical(int cls, const SynthFont& font, std::size_t size) {
  const auto cov = render_coverage(cls, font, size);
  Image img(size, size);
  for (std::size_t i = 0; i < cov.size(); ++i) {
    const std::uint8_t v = to_byte(1.0 - cov[i]);
    img.rgb[i * 3] = img.rgb[i * 3 + 1] = img.rgb[i * 3 + 2] = v;
  }
  return img;
}

}  // namespace cgrn
