#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "cgrn/tensor.hpp"

namespace cgrn {

class ImageFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit interleaved RGB raster.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(std::size_t w, std::size_t h, std::uint8_t fill = 255) : width(w), height(h), rgb(w * h * 3, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }

  bool operator==(const Image&) const = default;
};

std::uint8_t to_byte(double v);  // clamps to [0,1], rounds to nearest

/// Binary PPM: "P6\n<w> <h>\n255\n" followed by RGB bytes.
std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(const std::vector<std::uint8_t>& bytes);  // header comments allowed
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

/// Bilinear resampling with corner-aligned sample grids, so the four corner
/// pixels map onto the four source corners exactly.
Image resize_bilinear(const Image& img, std::size_t width, std::size_t height);

/// [3,H,W] tensor with values byte / 255.
Tensor to_tensor(const Image& img);
/// Writes image `img` into row `index` of an [N,3,H,W] tensor.
void copy_into(const Image& img, Tensor& batch, std::size_t index);
/// Converts a [3,H,W] tensor, or row `index` of an [N,3,H,W] tensor.
Image to_image(const Tensor& t, std::size_t index = 0);

}  // namespace cgrn
