#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgrn/tensor.hpp"

namespace cgrn {

/// Optimizer partition of the trainable parameters.
enum class Slice { Encoder, Classifier, Generator, Discriminator };

std::string to_string(Slice s);
/// Name prefix used for a slice ("θe/", "θc/", "θg/", "θd/").
std::string slice_prefix(Slice s);
/// Prefix for the font embedding table, which belongs to the Generator slice.
inline const std::string kFontEmbeddingPrefix = "fontemb/";

/// Named, ordered collection of trainable tensors plus non-trainable buffers
/// (batch-norm running statistics). Registration order is the iteration and
/// serialization order.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Slice slice;
    Tensor tensor;
  };

  /// Registers a trainable tensor under slice_prefix(slice) + local_name.
  Tensor add(Slice slice, const std::string& local_name, Tensor tensor);
  /// Registers a trainable tensor with an explicit full name.
  Tensor add_named(Slice slice, const std::string& full_name, Tensor tensor);
  /// Registers a buffer under slice_prefix(slice) + local_name.
  Tensor add_buffer(Slice slice, const std::string& local_name, Tensor tensor);

  const std::vector<Entry>& parameters() const { return params_; }
  const std::vector<Entry>& buffers() const { return buffers_; }

  std::vector<NamedTensor> slice(Slice s) const;
  std::vector<NamedTensor> slices(std::initializer_list<Slice> s) const;

  /// Looks up a parameter or buffer by full name; throws std::out_of_range.
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t parameter_count() const;  // total scalar count over parameters
  void zero_grad();

  /// Deep copy of values (no gradients, no graph history).
  ParameterStore clone() const;
  /// Copies values from `other`; names and shapes must match exactly.
  void copy_values_from(const ParameterStore& other);

 private:
  void check_unique(const std::string& name) const;

  std::vector<Entry> params_;
  std::vector<Entry> buffers_;
};

}  // namespace cgrn
