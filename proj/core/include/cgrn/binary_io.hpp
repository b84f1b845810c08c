#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

// Little-endian primitive encoding shared by the tensor dump and checkpoint
// formats.
namespace cgrn::binary {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename UInt>
void write_le(std::ostream& os, UInt value) {
  char bytes[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  os.write(bytes, sizeof(UInt));
}

template <typename UInt>
UInt read_le(std::istream& is) {
  unsigned char bytes[sizeof(UInt)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) throw FormatError("unexpected end of stream");
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

inline void write_f64(std::ostream& os, double v) { write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v)); }
inline void write_f32(std::ostream& os, float v) { write_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v)); }
inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }
inline float read_f32(std::istream& is) { return std::bit_cast<float>(read_le<std::uint32_t>(is)); }

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const char* what) {
  char got[4];
  if (!is.read(got, 4) || std::string(got, 4) != std::string(magic, 4)) {
    throw FormatError(std::string(what) + ": bad magic, expected \"" + magic + "\"");
  }
}

}  // namespace cgrn::binary
