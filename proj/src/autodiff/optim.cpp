#include "cael/optim.hpp"

#include <cmath>

#include "cael/kernels.hpp"

namespace cael {

double step_decay_lr(double initial, std::size_t epoch, std::size_t step_epochs, double gamma) {
  if (step_epochs == 0) return initial;
  return initial * std::pow(gamma, static_cast<double>(epoch / step_epochs));
}

Adam::Adam(const ParamStore& params, AdamConfig config) : params_(params.entries()) {
  state_.config = config;
  state_.learning_rate = config.learning_rate;
  for (const auto& p : params_) {
    state_.first_moment.emplace_back(p.tensor.numel(), 0.0);
    state_.second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad())
      if (!std::isfinite(g))
        throw NonFiniteGradient("adam: non-finite gradient in parameter '" + p.name + "' at step " +
                                std::to_string(state_.step_count + 1));
  }
  ++state_.step_count;
  const auto& cfg = state_.config;
  const double t = static_cast<double>(state_.step_count);
  const kernels::AdamCoeffs coeffs{state_.learning_rate, cfg.beta1,
                                   cfg.beta2,            cfg.epsilon,
                                   cfg.weight_decay,     1.0 - std::pow(cfg.beta1, t),
                                   1.0 - std::pow(cfg.beta2, t)};
  std::vector<double> zeros;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& w = params_[i].tensor;
    std::span<const double> g = w.grad();
    if (!w.has_grad()) {
      zeros.assign(w.numel(), 0.0);
      g = zeros;
    }
    kernels::adam_update(w.data(), g, state_.first_moment[i], state_.second_moment[i], coeffs);
  }
}

}  // namespace cael
