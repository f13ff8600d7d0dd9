#include "cael/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace cael::fft {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    if (plan) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

double dct_scale(std::size_t k, std::size_t n) {
  return k == 0 ? std::sqrt(1.0 / (4.0 * static_cast<double>(n)))
                : std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
}

}  // namespace

std::vector<double> dct2(const std::vector<double>& values, std::size_t h, std::size_t w) {
  std::vector<double> in(values), out(h * w);
  Plan p;
  {
    std::lock_guard lock(planner_mutex());
    p.plan = fftw_plan_r2r_2d(static_cast<int>(h), static_cast<int>(w), in.data(), out.data(),
                              FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
  }
  fftw_execute(p.plan);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) out[u * w + v] *= dct_scale(u, h) * dct_scale(v, w);
  return out;
}

std::vector<double> idct2(const std::vector<double>& values, std::size_t h, std::size_t w) {
  // REDFT01 computes x_j = X_0 + 2 sum_k X_k cos(...); undo the orthonormal scaling first.
  std::vector<double> in(h * w), out(h * w);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v)
      in[u * w + v] = values[u * w + v] * (u == 0 ? 2.0 : 1.0) * (v == 0 ? 2.0 : 1.0) *
                      dct_scale(u, h) * dct_scale(v, w);
  Plan p;
  {
    std::lock_guard lock(planner_mutex());
    p.plan = fftw_plan_r2r_2d(static_cast<int>(h), static_cast<int>(w), in.data(), out.data(),
                              FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
  }
  fftw_execute(p.plan);
  return out;
}

std::vector<std::complex<double>> dft2(const std::vector<double>& values, std::size_t h,
                                       std::size_t w) {
  std::vector<std::complex<double>> in(values.begin(), values.end()), out(h * w);
  Plan p;
  {
    std::lock_guard lock(planner_mutex());
    p.plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w),
                              reinterpret_cast<fftw_complex*>(in.data()),
                              reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                              FFTW_ESTIMATE);
  }
  fftw_execute(p.plan);
  return out;
}

}  // namespace cael::fft
