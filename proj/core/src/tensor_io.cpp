#include "cgrn/tensor_io.hpp"

#include <fstream>
#include <limits>

#include "cgrn/binary_io.hpp"

namespace cgrn {

using binary::FormatError;

DType native_dtype() { return sizeof(Real) == sizeof(double) ? DType::F64 : DType::F32; }

void write_tensor(std::ostream& os, const Tensor& t, DType dtype) {
  if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw FormatError("tensor rank too large to encode");
  binary::write_magic(os, "CGTN");
  binary::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(dtype));
  binary::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape().dims()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw FormatError("tensor extent too large to encode");
    binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  }
  for (Real v : t.data()) {
    if (dtype == DType::F64) {
      binary::write_f64(os, static_cast<double>(v));
    } else {
      binary::write_f32(os, static_cast<float>(v));
    }
  }
  if (!os) throw FormatError("failed writing tensor record");
}

Tensor read_tensor(std::istream& is) {
  binary::expect_magic(is, "CGTN", "tensor record");
  const auto dtype = binary::read_le<std::uint8_t>(is);
  if (dtype > 1) throw FormatError("tensor record: unknown dtype " + std::to_string(dtype));
  const auto rank = binary::read_le<std::uint8_t>(is);
  std::vector<std::size_t> dims(rank);
  for (auto& d : dims) {
    d = binary::read_le<std::uint32_t>(is);
    if (d == 0) throw FormatError("tensor record: zero extent");
  }
  Shape shape(std::move(dims));
  std::vector<Real> data(shape.numel());
  for (auto& v : data) {
    v = dtype == 0 ? static_cast<Real>(binary::read_f64(is)) : static_cast<Real>(binary::read_f32(is));
  }
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(os, t, dtype);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace cgrn
