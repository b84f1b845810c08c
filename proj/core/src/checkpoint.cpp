#include "cgrn/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "cgrn/binary_io.hpp"
#include "cgrn/tensor_io.hpp"

namespace cgrn {

using binary::FormatError;

namespace {

void write_record(std::ostream& os, const std::string& name, const Tensor& t) {
  if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("name too long: " + name);
  binary::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_tensor(os, t);
}

NamedTensor read_record(std::istream& is) {
  const auto len = binary::read_le<std::uint16_t>(is);
  std::string name(len, '\0');
  if (!is.read(name.data(), len)) throw FormatError("checkpoint: truncated record name");
  return NamedTensor{std::move(name), read_tensor(is)};
}

void copy_into(Tensor dst, const Tensor& src, const std::string& name) {
  if (dst.shape() != src.shape()) {
    throw FormatError("checkpoint: shape mismatch for '" + name + "': stored " + src.shape().str() + ", expected " +
                      dst.shape().str());
  }
  std::copy(src.data().begin(), src.data().end(), dst.data().begin());
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                      const std::vector<const Adam*>& optimizers, const CheckpointFooter& footer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  binary::write_magic(os, "CGRN");
  binary::write_le<std::uint32_t>(os, kCheckpointVersion);
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.parameters().size() + store.buffers().size()));
  for (const auto& e : store.parameters()) write_record(os, e.name, e.tensor);
  for (const auto& e : store.buffers()) write_record(os, e.name, e.tensor);

  std::uint32_t moments = 0;
  for (const Adam* opt : optimizers) moments += static_cast<std::uint32_t>(2 * opt->slots().size());
  binary::write_le<std::uint32_t>(os, moments);
  for (const Adam* opt : optimizers) {
    for (const auto& s : opt->slots()) write_record(os, "adam/m/" + s.name, s.m);
    for (const auto& s : opt->slots()) write_record(os, "adam/v/" + s.name, s.v);
  }

  binary::write_le<std::uint64_t>(os, footer.step);
  binary::write_le<std::uint32_t>(os, footer.epoch);
  binary::write_le<std::uint32_t>(os, footer.epoch_step);
  binary::write_le<std::uint64_t>(os, footer.seed);
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(optimizers.size()));
  for (const Adam* opt : optimizers) binary::write_le<std::uint64_t>(os, opt->steps());
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(footer.rng_state.size()));
  os.write(footer.rng_state.data(), static_cast<std::streamsize>(footer.rng_state.size()));
  if (!os) throw FormatError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  binary::expect_magic(is, "CGRN", "checkpoint");
  const auto version = binary::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  const auto count = binary::read_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < count; ++i) ckpt.tensors.push_back(read_record(is));
  const auto moments = binary::read_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < moments; ++i) ckpt.adam.push_back(read_record(is));

  auto& f = ckpt.footer;
  f.step = binary::read_le<std::uint64_t>(is);
  f.epoch = binary::read_le<std::uint32_t>(is);
  f.epoch_step = binary::read_le<std::uint32_t>(is);
  f.seed = binary::read_le<std::uint64_t>(is);
  const auto nopt = binary::read_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < nopt; ++i) f.optimizer_steps.push_back(binary::read_le<std::uint64_t>(is));
  const auto len = binary::read_le<std::uint32_t>(is);
  f.rng_state.resize(len);
  if (len && !is.read(f.rng_state.data(), len)) throw FormatError("checkpoint: truncated footer");
  return ckpt;
}

void restore_checkpoint(const Checkpoint& ckpt, ParameterStore& store, const std::vector<Adam*>& optimizers) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& nt : ckpt.tensors) by_name[nt.name] = &nt.tensor;
  for (const auto& nt : ckpt.adam) by_name[nt.name] = &nt.tensor;
  auto find = [&](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint: missing record '" + name + "'");
    return *it->second;
  };
  for (const auto* list : {&store.parameters(), &store.buffers()}) {
    for (const auto& e : *list) copy_into(e.tensor, find(e.name), e.name);
  }
  if (!optimizers.empty() && ckpt.footer.optimizer_steps.size() != optimizers.size()) {
    throw FormatError("checkpoint: optimizer count mismatch");
  }
  for (std::size_t i = 0; i < optimizers.size(); ++i) {
    for (auto& s : optimizers[i]->slots()) {
      copy_into(s.m, find("adam/m/" + s.name), "adam/m/" + s.name);
      copy_into(s.v, find("adam/v/" + s.name), "adam/v/" + s.name);
    }
    optimizers[i]->set_steps(ckpt.footer.optimizer_steps[i]);
  }
}

}  // namespace cgrn
