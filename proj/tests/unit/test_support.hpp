#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cgrn/tensor.hpp"

namespace cgrn::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape), requires_grad);
  for (auto& v : t.data()) v = static_cast<Real>(dist(rng));
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a.ptr()[i]) - static_cast<double>(b.ptr()[i])));
  }
  return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (a.ptr()[i] != b.ptr()[i]) return false;
  }
  return true;
}

#ifdef CGRN_SINGLE_PRECISION
inline constexpr double kExact = 1e-5;
inline constexpr double kOracle = 1e-4;
#else
inline constexpr double kExact = 1e-12;
inline constexpr double kOracle = 1e-9;
#endif

}  // namespace cgrn::testing
