#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgrn/tensor.hpp"

namespace cgrn {

struct AdamConfig {
  Real lr = Real(1e-4);
  Real beta1 = Real(0.5);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
};

/// Adam with bias correction over a fixed slice of parameters. The step
/// counter is shared by every parameter in the slice.
class Adam {
 public:
  struct Slot {
    std::string name;
    Tensor param;
    Tensor m;
    Tensor v;
  };

  Adam() = default;
  Adam(const std::vector<NamedTensor>& params, AdamConfig config);

  /// Applies one update from the populated gradients, then zeroes them.
  /// Throws std::logic_error naming the first parameter without a gradient;
  /// in that case nothing is modified.
  void step();

  void zero_grad();

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }

  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  AdamConfig config_;
  std::vector<Slot> slots_;
  std::uint64_t t_ = 0;
};

}  // namespace cgrn
