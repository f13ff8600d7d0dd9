#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cael/image.hpp"

namespace cael {

enum class CorruptionKind {
  saturation,
  contrast,
  blockwise,
  gaussian_noise,
  blur,
  pixelation,
  compression_proxy,
};

inline constexpr int kMaxCorruptionLevel = 5;

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::saturation;
  int level = 0;  // 0 is the identity; 1..5 index the level table
};

std::string_view corruption_name(CorruptionKind kind);
CorruptionKind parse_corruption(std::string_view name);
const std::vector<CorruptionKind>& all_corruptions();

// Level -> parameter table (index 0 = level 1). Versioned with the source.
struct CorruptionTable {
  static constexpr int kVersion = 1;
  std::array<double, 5> saturation_factor;
  std::array<double, 5> contrast_factor;
  std::array<int, 5> blockwise_count;
  double blockwise_size_fraction;  // block side = max(2, round(fraction * min(H,W)))
  std::array<double, 5> noise_variance;
  std::array<double, 5> blur_sigma;
  std::array<int, 5> pixelation_block;
  std::array<int, 5> jpeg_quality;
};

const CorruptionTable& corruption_table();

// Throws std::invalid_argument for a level outside [0, 5].
void validate(const CorruptionSpec& spec);

// Pure function of (img, spec, seed). Level 0 returns the input unchanged.
Image corrupt(const Image& img, const CorruptionSpec& spec, std::uint64_t seed);

// Building blocks, exposed for tests.
Image adjust_saturation(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);
Image pixelate(const Image& img, std::size_t block);
Image jpeg_proxy(const Image& img, int quality);

}  // namespace cael
