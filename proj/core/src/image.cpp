#include "cgrn/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace cgrn {

std::uint8_t to_byte(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space_and_comments();
    std::size_t start = pos_, value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 24)) throw ImageFormatError("PPM header value too large");
      ++pos_;
    }
    if (pos_ == start) throw ImageFormatError("malformed PPM header");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw ImageFormatError("malformed PPM header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ImageFormatError("not a binary P6 PPM file");
  HeaderReader r(bytes);
  const std::size_t w = r.number(), h = r.number(), maxval = r.number();
  if (w == 0 || h == 0) throw ImageFormatError("PPM has zero extent");
  if (maxval != 255) throw ImageFormatError("PPM maxval " + std::to_string(maxval) + " unsupported (need 255)");
  const std::size_t off = r.raster_offset();
  if (bytes.size() - off < w * h * 3) throw ImageFormatError("PPM raster truncated");
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                 bytes.begin() + static_cast<std::ptrdiff_t>(off + w * h * 3));
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto bytes = encode_ppm(img);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const ImageFormatError& e) {
    throw ImageFormatError(path.string() + ": " + e.what());
  }
}

Image resize_bilinear(const Image& img, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw std::invalid_argument("resize_bilinear: zero target size");
  if (img.width == width && img.height == height) return img;
  Image out(width, height);
  auto coord = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
    return n_out == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
  };
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = coord(y, height, img.height);
    const std::size_t y0 = static_cast<std::size_t>(sy), y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = coord(x, width, img.width);
      const std::size_t x0 = static_cast<std::size_t>(sx), x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
        const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
        out.at(x, y, c) = to_byte(((1 - fy) * top + fy * bottom) / 255.0);
      }
    }
  }
  return out;
}

Tensor to_tensor(const Image& img) {
  Tensor t(Shape{3, img.height, img.width});
  copy_into(img, t, 0);
  return t;
}

void copy_into(const Image& img, Tensor& batch, std::size_t index) {
  const std::size_t plane = img.width * img.height;
  const bool single = batch.rank() == 3;
  const std::size_t c_axis = single ? 0 : 1;
  if (!single && index >= batch.dim(0)) throw ShapeError("copy_into: row out of range");
  if (batch.dim(c_axis) != 3 || batch.dim(c_axis + 1) != img.height || batch.dim(c_axis + 2) != img.width) {
    throw ShapeError("copy_into: tensor " + batch.shape().str() + " does not fit a " + std::to_string(img.width) +
                     "x" + std::to_string(img.height) + " image");
  }
  Real* dst = batch.ptr() + index * 3 * plane;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) dst[c * plane + i] = static_cast<Real>(img.rgb[i * 3 + c]) / Real(255);
  }
}

Image to_image(const Tensor& t, std::size_t index) {
  const bool single = t.rank() == 3;
  if (!single && t.rank() != 4) throw ShapeError("to_image: expected [3,H,W] or [N,3,H,W], got " + t.shape().str());
  const std::size_t c_axis = single ? 0 : 1;
  if (t.dim(c_axis) != 3) throw ShapeError("to_image: expected 3 channels, got " + t.shape().str());
  if (!single && index >= t.dim(0)) throw ShapeError("to_image: row out of range");
  const std::size_t h = t.dim(c_axis + 1), w = t.dim(c_axis + 2), plane = h * w;
  Image img(w, h);
  const Real* src = t.ptr() + index * 3 * plane;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) img.rgb[i * 3 + c] = to_byte(static_cast<double>(src[c * plane + i]));
  }
  return img;
}

}  // namespace cgrn
