#include "cael/spectrum.hpp"

#include <cmath>
#include <string>

#include "cael/fft.hpp"

namespace cael {

Plane log_spectrum(const Image& img) {
  const Plane gray = to_gray(img);
  const std::size_t h = gray.height, w = gray.width;
  const auto f = fft::dft2(gray.values, h, w);
  Plane out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out.at((y + h / 2) % h, (x + w / 2) % w) = std::log1p(std::abs(f[y * w + x]));
  return out;
}

Plane mean_spectrum(std::span<const Image> imgs) {
  if (imgs.empty()) throw ImageError("mean_spectrum: empty image list");
  const std::size_t h = imgs.front().height, w = imgs.front().width;
  Plane acc(h, w);
  for (const Image& img : imgs) {
    if (img.height != h || img.width != w)
      throw ImageError("mean_spectrum: size mismatch " + std::to_string(img.height) + "x" +
                       std::to_string(img.width) + " vs " + std::to_string(h) + "x" +
                       std::to_string(w));
    const Plane s = log_spectrum(img);
    for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += s.values[i];
  }
  for (double& v : acc.values) v /= static_cast<double>(imgs.size());
  return acc;
}

double annulus_mean(const Plane& centered, double inner, double outer) {
  const double cy = static_cast<double>(centered.height / 2);
  const double cx = static_cast<double>(centered.width / 2);
  const double half = static_cast<double>(std::min(centered.height, centered.width)) / 2.0;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y < centered.height; ++y)
    for (std::size_t x = 0; x < centered.width; ++x) {
      const double r = std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx) / half;
      if (r >= inner && r < outer) {
        total += centered.at(y, x);
        ++count;
      }
    }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace cael
