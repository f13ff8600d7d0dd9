#pragma once

// Edge and frequency operators producing the edge-domain input image.

#include <string>
#include <string_view>
#include <vector>

#include "cael/image.hpp"

namespace cael {

enum class OperatorKind { sobel, canny, log, marr_hildreth, dct };

std::string_view operator_name(OperatorKind op);
// Accepts "sobel", "canny", "log", "mh"/"marr_hildreth", "dct" (case-insensitive).
OperatorKind parse_operator(std::string_view name);
const std::vector<OperatorKind>& all_operators();

struct EdgeParams {
  double canny_sigma = 1.4;
  double canny_low = 0.1;   // fraction of max gradient magnitude
  double canny_high = 0.2;
  double log_sigma = 1.0;
  double zero_cross_threshold = 0.1;  // fraction of max |LoG|
};

// Correlation with reflect-101 borders. kernel is kh x kw row-major, odd sizes.
Plane correlate_reflect(const Plane& src, const std::vector<double>& kernel, std::size_t kh,
                        std::size_t kw);

struct SobelResponse {
  Plane gx;
  Plane gy;
  Plane magnitude;
};

SobelResponse sobel_raw(const Plane& gray);
Plane gaussian_blur(const Plane& gray, double sigma);
// Zero-sum sampled Laplacian-of-Gaussian kernel of radius ceil(3*sigma).
std::vector<double> log_kernel(double sigma, std::size_t& size);
Plane log_raw(const Plane& gray, double sigma);
Plane marr_hildreth_raw(const Plane& gray, const EdgeParams& params = {});
Plane canny_raw(const Plane& gray, const EdgeParams& params = {});
// Orthonormal 2D DCT-II coefficients.
Plane dct2(const Plane& gray);
Plane dct_log_magnitude(const Plane& gray);

// Smallest side the operator accepts.
std::size_t operator_support(OperatorKind op, const EdgeParams& params = {});

// RGB (or gray) image -> single-channel operator map, min-max normalised.
Image edge_transform(const Image& img, OperatorKind op, const EdgeParams& params = {});

}  // namespace cael
