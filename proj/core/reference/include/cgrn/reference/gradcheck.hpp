#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cgrn/tensor.hpp"

namespace cgrn::reference {

/// A differentiable function of `inputs`; every input is checked.
struct GradCase {
  std::string op;
  std::string variant;
  std::vector<Tensor> inputs;
  std::function<Tensor(const std::vector<Tensor>&)> fn;
};

struct GradCheckResult {
  std::string op;
  std::string variant;
  double max_rel_error = 0;  // over inputs: max |a - n| / max(|a|, |n|) in the inf-norm
  bool passed = false;
  std::string detail;
};

#ifdef CGRN_SINGLE_PRECISION
inline constexpr double kGradStep = 1e-2;
inline constexpr double kGradTolerance = 5e-2;
#else
inline constexpr double kGradStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;
#endif

/// Compares backward() against central differences of <fn(inputs), r> for
/// a fixed random projection r.
GradCheckResult gradcheck(const GradCase& c, double h = kGradStep, double tol = kGradTolerance,
                          std::uint64_t seed = 7);

/// At least three shape variants for every differentiable operation.
std::vector<GradCase> standard_cases(std::uint64_t seed);

/// Scaling op whose backward rule is deliberately wrong by a factor of two;
/// gradcheck must reject it under the name "faulty_scale".
GradCase corrupted_case(std::uint64_t seed);

}  // namespace cgrn::reference
