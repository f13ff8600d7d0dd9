#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace cael {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Planar (CHW) image, values in [0,1]. channels is 1 or 3.
struct Image {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0);

  double& at(std::size_t c, std::size_t y, std::size_t x) { return pixels[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels[(c * height + y) * width + x];
  }
  std::size_t plane_size() const { return height * width; }
  bool operator==(const Image&) const = default;
};

// Unclamped single-channel response map (filter outputs, spectra).
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {}

  double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

// Luma for RGB input, pass-through for grayscale.
Plane to_gray(const Image& img);
Image plane_to_image(const Plane& p);  // clamps to [0,1]
void clamp_unit(Image& img);

// Maps [min,max] to [0,1]; a constant plane maps to all zeros.
Plane minmax_normalize(const Plane& p);

// Binary PNM: P6 (RGB) or P5 (gray), maxval 255.
Image read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& img);
// 8-bit quantisation used by the PNM writer: round(v*255).
unsigned char quantize_u8(double v);

}  // namespace cael
