#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cgrn/adam.hpp"
#include "cgrn/parameter_store.hpp"

namespace cgrn {

/// Training progress stored after the tensor records.
struct CheckpointFooter {
  std::uint64_t step = 0;
  std::uint32_t epoch = 0;
  std::uint32_t epoch_step = 0;  // steps already taken inside `epoch`
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> optimizer_steps;  // one per optimizer, in write order
  std::string rng_state;                       // textual std::mt19937_64 state

  bool operator==(const CheckpointFooter&) const = default;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;  // parameters then buffers
  std::vector<NamedTensor> adam;     // adam/m/<name>, adam/v/<name>
  CheckpointFooter footer;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "CGRN", u32 version, u32 count, count x (u16 name length, UTF-8
/// name, CGTN record) for parameters and buffers; u32 count and the same
/// record form for optimizer moments; then the footer: u64 step, u32 epoch,
/// u32 epoch_step, u64 seed, u32 n, n x u64 optimizer steps, u32 length and
/// the RNG state text.
void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                      const std::vector<const Adam*>& optimizers, const CheckpointFooter& footer);

Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies parameter, buffer and moment values into live objects. Every name
/// in the store must be present with a matching shape.
void restore_checkpoint(const Checkpoint& ckpt, ParameterStore& store, const std::vector<Adam*>& optimizers);

}  // namespace cgrn
