#include "cael/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "cael/edges.hpp"
#include "cael/fft.hpp"

namespace cael {

// Level tables. Bump kVersion whenever a value changes.
const CorruptionTable& corruption_table() {
  static const CorruptionTable table{
      .saturation_factor = {0.4, 0.3, 0.2, 0.1, 0.0},
      .contrast_factor = {0.85, 0.725, 0.6, 0.475, 0.35},
      .blockwise_count = {16, 32, 48, 64, 80},
      .blockwise_size_fraction = 0.05,
      .noise_variance = {0.001, 0.002, 0.005, 0.01, 0.05},
      .blur_sigma = {0.5, 1.0, 1.5, 2.0, 2.5},
      .pixelation_block = {2, 3, 4, 6, 8},
      .jpeg_quality = {60, 40, 25, 15, 8},
  };
  return table;
}

std::string_view corruption_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::saturation: return "saturation";
    case CorruptionKind::contrast: return "contrast";
    case CorruptionKind::blockwise: return "blockwise";
    case CorruptionKind::gaussian_noise: return "gaussian_noise";
    case CorruptionKind::blur: return "blur";
    case CorruptionKind::pixelation: return "pixelation";
    case CorruptionKind::compression_proxy: return "compression_proxy";
  }
  return "?";
}

CorruptionKind parse_corruption(std::string_view name) {
  for (CorruptionKind k : all_corruptions())
    if (corruption_name(k) == name) return k;
  throw std::invalid_argument("unknown corruption '" + std::string(name) + "'");
}

const std::vector<CorruptionKind>& all_corruptions() {
  static const std::vector<CorruptionKind> kinds{
      CorruptionKind::saturation, CorruptionKind::contrast,   CorruptionKind::blockwise,
      CorruptionKind::gaussian_noise, CorruptionKind::blur, CorruptionKind::pixelation,
      CorruptionKind::compression_proxy};
  return kinds;
}

void validate(const CorruptionSpec& spec) {
  if (spec.level < 0 || spec.level > kMaxCorruptionLevel)
    throw std::invalid_argument("corruption level " + std::to_string(spec.level) +
                                " outside [0, " + std::to_string(kMaxCorruptionLevel) + "]");
}

Image adjust_saturation(const Image& img, double factor) {
  if (img.channels != 3) return img;
  const Plane gray = to_gray(img);
  Image out = img;
  const std::size_t n = img.plane_size();
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      const double g = gray.values[i];
      out.pixels[c * n + i] = factor * img.pixels[c * n + i] + (1.0 - factor) * g;
    }
  clamp_unit(out);
  return out;
}

Image adjust_contrast(const Image& img, double factor) {
  const Plane gray = to_gray(img);
  double m = 0.0;
  for (double v : gray.values) m += v;
  m /= static_cast<double>(gray.values.size());
  Image out = img;
  for (double& v : out.pixels) v = m + factor * (v - m);
  clamp_unit(out);
  return out;
}

Image pixelate(const Image& img, std::size_t block) {
  if (block <= 1) return img;
  Image out = img;
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t by = 0; by < img.height; by += block)
      for (std::size_t bx = 0; bx < img.width; bx += block) {
        const std::size_t ey = std::min(by + block, img.height);
        const std::size_t ex = std::min(bx + block, img.width);
        double s = 0.0;
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) s += img.at(c, y, x);
        s /= static_cast<double>((ey - by) * (ex - bx));
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) out.at(c, y, x) = s;
      }
  return out;
}

Image jpeg_proxy(const Image& img, int quality) {
  static constexpr int kLumaQuant[64] = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::vector<double> q(64);
  for (int i = 0; i < 64; ++i) q[i] = std::clamp((kLumaQuant[i] * scale + 50) / 100, 1, 255);

  Image out = img;
  std::vector<double> block(64);
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t by = 0; by < img.height; by += 8)
      for (std::size_t bx = 0; bx < img.width; bx += 8) {
        // Edge replicate partial blocks.
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t x = 0; x < 8; ++x)
            block[y * 8 + x] = img.at(c, std::min(by + y, img.height - 1),
                                      std::min(bx + x, img.width - 1)) * 255.0 - 128.0;
        auto coeff = fft::dct2(block, 8, 8);
        for (std::size_t i = 0; i < 64; ++i) coeff[i] = std::round(coeff[i] / q[i]) * q[i];
        const auto rec = fft::idct2(coeff, 8, 8);
        for (std::size_t y = 0; y < 8 && by + y < img.height; ++y)
          for (std::size_t x = 0; x < 8 && bx + x < img.width; ++x)
            out.at(c, by + y, bx + x) = (rec[y * 8 + x] + 128.0) / 255.0;
      }
  clamp_unit(out);
  return out;
}

namespace {

Image add_noise(const Image& img, double variance, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(variance));
  Image out = img;
  for (double& v : out.pixels) v += dist(rng);
  clamp_unit(out);
  return out;
}

Image blur(const Image& img, double sigma) {
  Image out = img;
  const std::size_t n = img.plane_size();
  for (std::size_t c = 0; c < img.channels; ++c) {
    Plane p(img.height, img.width);
    std::copy_n(img.pixels.begin() + static_cast<long>(c * n), n, p.values.begin());
    const Plane b = gaussian_blur(p, sigma);
    std::copy(b.values.begin(), b.values.end(), out.pixels.begin() + static_cast<long>(c * n));
  }
  clamp_unit(out);
  return out;
}

Image blockwise(const Image& img, int count, double size_fraction, std::mt19937_64& rng) {
  Image out = img;
  const std::size_t side = std::max<std::size_t>(
      2, static_cast<std::size_t>(
             std::lround(size_fraction * static_cast<double>(std::min(img.height, img.width)))));
  std::uniform_int_distribution<std::size_t> ys(0, img.height > side ? img.height - side : 0);
  std::uniform_int_distribution<std::size_t> xs(0, img.width > side ? img.width - side : 0);
  std::uniform_real_distribution<double> color(0.0, 1.0);
  for (int b = 0; b < count; ++b) {
    const std::size_t y0 = ys(rng), x0 = xs(rng);
    for (std::size_t c = 0; c < img.channels; ++c) {
      const double v = color(rng);
      for (std::size_t y = y0; y < std::min(y0 + side, img.height); ++y)
        for (std::size_t x = x0; x < std::min(x0 + side, img.width); ++x) out.at(c, y, x) = v;
    }
  }
  return out;
}

}  // namespace

Image corrupt(const Image& img, const CorruptionSpec& spec, std::uint64_t seed) {
  validate(spec);
  if (spec.level == 0) return img;
  const auto& t = corruption_table();
  const std::size_t li = static_cast<std::size_t>(spec.level - 1);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(spec.kind), static_cast<std::uint32_t>(spec.level)};
  std::mt19937_64 rng(seq);
  switch (spec.kind) {
    case CorruptionKind::saturation: return adjust_saturation(img, t.saturation_factor[li]);
    case CorruptionKind::contrast: return adjust_contrast(img, t.contrast_factor[li]);
    case CorruptionKind::blockwise:
      return blockwise(img, t.blockwise_count[li], t.blockwise_size_fraction, rng);
    case CorruptionKind::gaussian_noise: return add_noise(img, t.noise_variance[li], rng);
    case CorruptionKind::blur: return blur(img, t.blur_sigma[li]);
    case CorruptionKind::pixelation:
      return pixelate(img, static_cast<std::size_t>(t.pixelation_block[li]));
    case CorruptionKind::compression_proxy: return jpeg_proxy(img, t.jpeg_quality[li]);
  }
  return img;
}

}  // namespace cael
