#include "cael/probe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cael/edges.hpp"

namespace cael {

std::vector<double> dct_annulus_features(const Image& img, std::size_t bands) {
  if (bands == 0) throw std::invalid_argument("dct_annulus_features: bands must be positive");
  const Plane d = dct2(to_gray(img));
  const double norm = std::sqrt(2.0) * static_cast<double>(std::max(d.height, d.width));
  std::vector<double> energy(bands, 0.0);
  std::vector<std::size_t> count(bands, 0);
  for (std::size_t v = 0; v < d.height; ++v)
    for (std::size_t u = 0; u < d.width; ++u) {
      const double r = std::hypot(static_cast<double>(u), static_cast<double>(v)) / norm;
      const std::size_t b = std::min(bands - 1, static_cast<std::size_t>(r * static_cast<double>(bands)));
      energy[b] += d.at(v, u) * d.at(v, u);
      ++count[b];
    }
  for (std::size_t b = 0; b < bands; ++b)
    energy[b] = std::log(energy[b] / static_cast<double>(std::max<std::size_t>(count[b], 1)) + 1e-12);
  return energy;
}

void LogisticProbe::fit(const std::vector<std::vector<double>>& x, std::span<const int> y,
                        std::size_t iterations, double step) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("LogisticProbe: bad training set");
  const std::size_t dims = x.front().size();
  const double n = static_cast<double>(x.size());
  mean_.assign(dims, 0.0);
  scale_.assign(dims, 0.0);
  for (const auto& row : x)
    for (std::size_t d = 0; d < dims; ++d) mean_[d] += row[d] / n;
  for (const auto& row : x)
    for (std::size_t d = 0; d < dims; ++d) scale_[d] += (row[d] - mean_[d]) * (row[d] - mean_[d]) / n;
  for (double& s : scale_) s = std::sqrt(s) + 1e-12;

  std::vector<std::vector<double>> z(x.size(), std::vector<double>(dims));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t d = 0; d < dims; ++d) z[i][d] = (x[i][d] - mean_[d]) / scale_[d];
  weights_.assign(dims, 0.0);
  bias_ = 0.0;
  std::vector<double> grad(dims);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double logit = bias_;
      for (std::size_t d = 0; d < dims; ++d) logit += weights_[d] * z[i][d];
      const double err = 1.0 / (1.0 + std::exp(-logit)) - static_cast<double>(y[i]);
      for (std::size_t d = 0; d < dims; ++d) grad[d] += err * z[i][d];
      grad_bias += err;
    }
    for (std::size_t d = 0; d < dims; ++d) weights_[d] -= step * grad[d] / n;
    bias_ -= step * grad_bias / n;
  }
}

double LogisticProbe::score(std::span<const double> f) const {
  if (f.size() != weights_.size()) throw std::invalid_argument("LogisticProbe: feature width mismatch");
  double logit = bias_;
  for (std::size_t d = 0; d < f.size(); ++d) logit += weights_[d] * (f[d] - mean_[d]) / scale_[d];
  return logit;
}

std::vector<double> LogisticProbe::score_all(const std::vector<std::vector<double>>& features) const {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(score(f));
  return out;
}

}  // namespace cael
