#include "cael/params.hpp"

#include <cmath>
#include <stdexcept>

namespace cael {

void ParamStore::add(std::string name, Tensor tensor) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  tensor.set_requires_grad(true);
  entries_.push_back({std::move(name), std::move(tensor)});
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.tensor);
  return out;
}

const Tensor* ParamStore::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e.tensor;
  return nullptr;
}

std::size_t ParamStore::total_numel() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.tensor.clear_grad();
}

ParamBuilder::ParamBuilder(std::uint64_t seed) : allocating_(true), rng_(seed) {}

ParamBuilder ParamBuilder::counting() { return ParamBuilder(); }

Tensor ParamBuilder::make(const std::string& name, Shape shape, Init init, std::size_t fan_in) {
  count_ += shape_numel(shape);
  declared_.emplace_back(name, shape);
  if (!allocating_) return {};

  Tensor t(shape);
  auto data = t.data();
  switch (init) {
    case Init::zeros:
      break;
    case Init::ones:
      std::fill(data.begin(), data.end(), 1.0);
      break;
    case Init::trunc_normal: {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (double& v : data) {
        double z = dist(rng_);
        while (std::abs(z) > 2.0) z = dist(rng_);
        v = 0.02 * z;
      }
      break;
    }
    case Init::kaiming: {
      if (fan_in == 0) throw std::invalid_argument("kaiming init needs fan_in for " + name);
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (double& v : data) v = dist(rng_);
      break;
    }
  }
  store_.add(name, t);
  return t;
}

}  // namespace cael
