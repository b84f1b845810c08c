#include "cgrn/parameter_store.hpp"

#include <algorithm>
#include <stdexcept>

namespace cgrn {

std::string to_string(Slice s) {
  switch (s) {
    case Slice::Encoder: return "encoder";
    case Slice::Classifier: return "classifier";
    case Slice::Generator: return "generator";
    case Slice::Discriminator: return "discriminator";
  }
  return "?";
}

std::string slice_prefix(Slice s) {
  switch (s) {
    case Slice::Encoder: return "θe/";
    case Slice::Classifier: return "θc/";
    case Slice::Generator: return "θg/";
    case Slice::Discriminator: return "θd/";
  }
  return "?/";
}

void ParameterStore::check_unique(const std::string& name) const {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
}

Tensor ParameterStore::add(Slice slice, const std::string& local_name, Tensor tensor) {
  return add_named(slice, slice_prefix(slice) + local_name, std::move(tensor));
}

Tensor ParameterStore::add_named(Slice slice, const std::string& full_name, Tensor tensor) {
  check_unique(full_name);
  tensor.set_requires_grad(true);
  params_.push_back(Entry{full_name, slice, tensor});
  return tensor;
}

Tensor ParameterStore::add_buffer(Slice slice, const std::string& local_name, Tensor tensor) {
  const std::string name = slice_prefix(slice) + local_name;
  check_unique(name);
  tensor.set_requires_grad(false);
  buffers_.push_back(Entry{name, slice, tensor});
  return tensor;
}

std::vector<NamedTensor> ParameterStore::slice(Slice s) const {
  std::vector<NamedTensor> out;
  for (const auto& e : params_) {
    if (e.slice == s) out.push_back({e.name, e.tensor});
  }
  return out;
}

std::vector<NamedTensor> ParameterStore::slices(std::initializer_list<Slice> list) const {
  std::vector<NamedTensor> out;
  for (const auto& e : params_) {
    if (std::find(list.begin(), list.end(), e.slice) != list.end()) out.push_back({e.name, e.tensor});
  }
  return out;
}

Tensor ParameterStore::get(const std::string& name) const {
  for (const auto* list : {&params_, &buffers_}) {
    for (const auto& e : *list) {
      if (e.name == name) return e.tensor;
    }
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
  auto match = [&](const Entry& e) { return e.name == name; };
  return std::any_of(params_.begin(), params_.end(), match) || std::any_of(buffers_.begin(), buffers_.end(), match);
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : params_) n += e.tensor.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : params_) e.tensor.zero_grad();
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (const auto& e : params_) {
    Tensor t = e.tensor.detach();
    t.set_requires_grad(true);
    out.params_.push_back(Entry{e.name, e.slice, t});
  }
  for (const auto& e : buffers_) out.buffers_.push_back(Entry{e.name, e.slice, e.tensor.detach()});
  return out;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  auto copy_list = [](std::vector<Entry>& dst, const std::vector<Entry>& src) {
    if (dst.size() != src.size()) throw std::invalid_argument("parameter stores differ in size");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i].name != src[i].name || dst[i].tensor.shape() != src[i].tensor.shape()) {
        throw std::invalid_argument("parameter mismatch at '" + dst[i].name + "'");
      }
      std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), dst[i].tensor.data().begin());
    }
  };
  copy_list(params_, other.params_);
  copy_list(buffers_, other.buffers_);
}

}  // namespace cgrn
