#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cael/params.hpp"

namespace cael {

struct AdamConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  double learning_rate = 1e-4;  // current, after scheduling
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Step decay: initial * gamma^floor(epoch / step_epochs).
double step_decay_lr(double initial, std::size_t epoch, std::size_t step_epochs = 15,
                     double gamma = 0.1);

// Adam with weight decay applied as an additive L2 gradient term.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config);

  // Updates every parameter from its gradient (missing gradient = zero).
  // Throws NonFiniteGradient naming the parameter before touching any state.
  void step();
  void set_learning_rate(double lr) { state_.learning_rate = lr; }

  const AdamState& state() const { return state_; }
  AdamState& state() { return state_; }

 private:
  std::vector<NamedTensor> params_;
  AdamState state_;
};

}  // namespace cael
