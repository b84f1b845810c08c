#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>

#include "cgrn/tensor.hpp"

namespace cgrn {

enum class DType : std::uint8_t { F64 = 0, F32 = 1 };

/// dtype that matches the compiled Real type.
DType native_dtype();

/// Tensor dump record: "CGTN", u8 dtype, u8 rank, rank x u32 extents, then
/// the row-major payload, all little-endian with no padding.
void write_tensor(std::ostream& os, const Tensor& t, DType dtype = native_dtype());
/// Reads one record, converting the payload to Real when dtypes differ.
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype = native_dtype());
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace cgrn
