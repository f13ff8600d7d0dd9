#pragma once

// Thin FFTW3 wrappers; plans are built under a process-wide lock.

#include <complex>
#include <cstddef>
#include <vector>

namespace cael::fft {

// Orthonormal 2D DCT-II of a row-major h x w array.
std::vector<double> dct2(const std::vector<double>& values, std::size_t h, std::size_t w);
// Inverse of dct2 (orthonormal DCT-III).
std::vector<double> idct2(const std::vector<double>& values, std::size_t h, std::size_t w);
// Full complex 2D DFT (unnormalised, e^{-2 pi i ...}) of real input.
std::vector<std::complex<double>> dft2(const std::vector<double>& values, std::size_t h,
                                       std::size_t w);

}  // namespace cael::fft
