#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace cgrn {

/// Derives an independent 64-bit stream key from a parent seed and a list of
/// coordinates (split, index, epoch, ...) using the splitmix64 finalizer.
/// Order-independent generation keys every sample by its coordinates.
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords);

std::string rng_state(const std::mt19937_64& rng);
void set_rng_state(std::mt19937_64& rng, const std::string& state);

}  // namespace cgrn
