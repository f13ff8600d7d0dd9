#pragma once

// Finite-difference checks for every differentiable op, shared by the unit
// and acceptance suites.

#include <array>
#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace cael::testing {

struct OpCheck {
  std::string name;
  GradCheckResult result;
};

inline std::vector<OpCheck> check_all_ops(std::uint64_t seed = 2024) {
  std::mt19937_64 rng(seed);
  std::vector<OpCheck> out;
  using V = const std::vector<Tensor>&;
  auto run = [&](const char* name, const std::function<Tensor(V)>& f, std::vector<Tensor> in) {
    out.push_back({name, grad_check(f, std::move(in))});
  };
  run("matmul 2d", [](V in) { return weighted_sum(matmul(in[0], in[1])); },
      {random_tensor({3, 4}, rng), random_tensor({4, 5}, rng)});
  run("matmul batched", [](V in) { return weighted_sum(matmul(in[0], in[1])); },
      {random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 3}, rng)});
  run("matmul nd x 2d", [](V in) { return weighted_sum(matmul(in[0], in[1])); },
      {random_tensor({2, 3, 4}, rng), random_tensor({4, 2}, rng)});
  run("linear", [](V in) { return weighted_sum(linear(in[0], in[1], in[2])); },
      {random_tensor({2, 3, 4}, rng), random_tensor({4, 5}, rng), random_tensor({5}, rng)});
  run("conv2d stride 1", [](V in) { return weighted_sum(conv2d(in[0], in[1], in[2], 1, 1)); },
      {random_tensor({2, 2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
  run("conv2d stride 2", [](V in) { return weighted_sum(conv2d(in[0], in[1], in[2], 2, 1)); },
      {random_tensor({1, 3, 8, 8}, rng), random_tensor({2, 3, 3, 3}, rng), random_tensor({2}, rng)});
  run("add broadcast", [](V in) { return weighted_sum(add(in[0], in[1])); },
      {random_tensor({4, 3, 2}, rng), random_tensor({3, 2}, rng)});
  run("mul", [](V in) { return weighted_sum(mul(in[0], in[1])); },
      {random_tensor({4, 3}, rng), random_tensor({4, 3}, rng)});
  run("scale", [](V in) { return weighted_sum(scale(in[0], -1.7)); }, {random_tensor({4, 3}, rng)});
  run("concat", [](V in) { return weighted_sum(concat(in, 1)); },
      {random_tensor({2, 3, 2}, rng), random_tensor({2, 1, 2}, rng)});
  run("slice", [](V in) { return weighted_sum(slice(in[0], 1, 1, 2)); }, {random_tensor({2, 4, 3}, rng)});
  run("split",
      [](V in) {
        const std::array<std::size_t, 2> sizes{1, 3};
        auto parts = split(in[0], 2, sizes);
        return add(weighted_sum(parts[0], 1), weighted_sum(parts[1], 2));
      },
      {random_tensor({2, 2, 4}, rng)});
  run("reshape", [](V in) { return weighted_sum(reshape(in[0], {4, 6})); }, {random_tensor({2, 3, 4}, rng)});
  run("transpose", [](V in) { return weighted_sum(transpose(in[0], 0, 2)); }, {random_tensor({2, 3, 4}, rng)});
  run("softmax", [](V in) { return weighted_sum(softmax(in[0])); }, {random_tensor({3, 5}, rng, -2, 2)});
  run("layer_norm", [](V in) { return weighted_sum(layer_norm(in[0], in[1], in[2])); },
      {random_tensor({3, 6}, rng), random_tensor({6}, rng), random_tensor({6}, rng)});
  run("gelu", [](V in) { return weighted_sum(gelu(in[0])); }, {random_tensor({4, 4}, rng, -3, 3)});
  run("sum", [](V in) { return sum(mul(in[0], in[0])); }, {random_tensor({3, 4}, rng)});
  run("mean", [](V in) { return scale(mean(mul(in[0], in[0])), 3.0); }, {random_tensor({4, 4}, rng)});
  run("mean_axis", [](V in) { return weighted_sum(mean_axis(in[0], 1)); }, {random_tensor({2, 5, 3}, rng)});
  run("patchify", [](V in) { return weighted_sum(patchify(in[0], 2)); }, {random_tensor({2, 3, 4, 4}, rng)});
  run("repeat_leading", [](V in) { return weighted_sum(repeat_leading(in[0], 3)); },
      {random_tensor({1, 2, 3}, rng)});
  run("cross_entropy",
      [](V in) {
        const std::array<int, 4> labels{1, 0, 1, 1};
        return cross_entropy(in[0], labels);
      },
      {random_tensor({4, 2}, rng, -3, 3)});
  return out;
}

}  // namespace cael::testing
