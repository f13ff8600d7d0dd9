#pragma once

// Hand-crafted spectral baseline: log DCT energy in concentric frequency
// bands, scored with a logistic regression.

#include <cstdint>
#include <span>
#include <vector>

#include "cael/image.hpp"

namespace cael {

// Mean squared orthonormal DCT-II coefficient of the luma plane in `bands`
// equal-width rings of radius sqrt(u^2+v^2) / (sqrt(2) * side), log-scaled.
std::vector<double> dct_annulus_features(const Image& img, std::size_t bands = 8);

class LogisticProbe {
 public:
  // Standardises features on the training set, then runs full-batch
  // gradient descent on the mean logistic loss.
  void fit(const std::vector<std::vector<double>>& features, std::span<const int> labels,
           std::size_t iterations = 500, double step = 0.5);
  double score(std::span<const double> features) const;  // logit
  std::vector<double> score_all(const std::vector<std::vector<double>>& features) const;

  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> mean_, scale_, weights_;
  double bias_ = 0.0;
};

}  // namespace cael
