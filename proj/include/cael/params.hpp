#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cael/tensor.hpp"

namespace cael {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered set of trainable parameters; order is declaration order.
class ParamStore {
 public:
  void add(std::string name, Tensor tensor);
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<NamedTensor>& entries() { return entries_; }
  std::vector<Tensor> tensors() const;
  const Tensor* find(std::string_view name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t total_numel() const;
  void zero_grad();

 private:
  std::vector<NamedTensor> entries_;
};

enum class Init {
  zeros,
  ones,
  trunc_normal,  // N(0, 0.02^2) truncated at two standard deviations
  kaiming,       // N(0, 2/fan_in)
};

// Declares parameters for a model. In counting mode nothing is allocated and
// make() returns an undefined tensor; only shapes and counts are kept, which
// lets full-scale configurations be measured without building them.
class ParamBuilder {
 public:
  explicit ParamBuilder(std::uint64_t seed);
  static ParamBuilder counting();

  Tensor make(const std::string& name, Shape shape, Init init, std::size_t fan_in = 0);

  bool allocating() const { return allocating_; }
  std::size_t count() const { return count_; }
  const std::vector<std::pair<std::string, Shape>>& declared() const { return declared_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

 private:
  ParamBuilder() = default;

  bool allocating_ = false;
  std::mt19937_64 rng_;
  std::size_t count_ = 0;
  std::vector<std::pair<std::string, Shape>> declared_;
  ParamStore store_;
};

inline std::string join_name(const std::string& prefix, const std::string& leaf) {
  return prefix.empty() ? leaf : prefix + "." + leaf;
}

}  // namespace cael
