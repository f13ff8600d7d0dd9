#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "cael/dataset.hpp"
#include "cael/edges.hpp"

namespace cael {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Plane white_noise(std::mt19937_64& rng, std::size_t size) {
  std::normal_distribution<double> n(0.0, 1.0);
  Plane p(size, size);
  for (double& v : p.values) v = n(rng);
  return p;
}

void clamp_into(Image& img) {
  for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
}

// Amplitudes of each family's artefact at strength 1.
constexpr double kGridAmplitude = 0.03;
constexpr double kDiffusionAmplitude = 0.012;
constexpr double kRingAmplitude = 0.06;

Image grid_artifact(const Image& base, double strength, std::mt19937_64& rng) {
  static constexpr std::array<std::size_t, 3> kPeriods{4, 6, 8};
  const std::size_t period = kPeriods[uniform_index(rng, 0, kPeriods.size() - 1)];
  const std::size_t half = period / 2;
  const std::size_t ox = uniform_index(rng, 0, period - 1);
  const std::size_t oy = uniform_index(rng, 0, period - 1);
  std::array<double, 3> tint{};
  for (double& t : tint) t = uniform(rng, 0.8, 1.2);
  Image out = base;
  for (std::size_t c = 0; c < out.channels; ++c)
    for (std::size_t y = 0; y < out.height; ++y)
      for (std::size_t x = 0; x < out.width; ++x) {
        const double sign = (((x + ox) / half + (y + oy) / half) % 2 == 0) ? 1.0 : -1.0;
        out.at(c, y, x) += strength * kGridAmplitude * tint[c % 3] * sign;
      }
  clamp_into(out);
  return out;
}

Image high_frequency_residual(const Image& base, double strength, std::mt19937_64& rng) {
  Image out = base;
  for (std::size_t c = 0; c < out.channels; ++c) {
    const Plane noise = white_noise(rng, out.height);
    const Plane low = gaussian_blur(noise, 1.0);
    for (std::size_t i = 0; i < out.plane_size(); ++i)
      out.pixels[c * out.plane_size() + i] +=
          strength * kDiffusionAmplitude * (noise.values[i] - low.values[i]);
  }
  clamp_into(out);
  return out;
}

Image patch_edit(const Image& base, double strength, std::mt19937_64& rng) {
  const std::size_t s = base.height;
  const std::size_t w = uniform_index(rng, s / 4, s / 2);
  const std::size_t h = uniform_index(rng, s / 4, s / 2);
  const std::size_t x0 = uniform_index(rng, 0, s - w);
  const std::size_t y0 = uniform_index(rng, 0, s - h);
  const Image fill = render_real(rng(), s);
  const double alpha = std::min(1.0, strength);
  Image out = base;
  for (std::size_t c = 0; c < out.channels; ++c)
    for (std::size_t y = y0; y < y0 + h; ++y)
      for (std::size_t x = x0; x < x0 + w; ++x)
        out.at(c, y, x) = (1.0 - alpha) * base.at(c, y, x) + alpha * fill.at(c, y, x);
  return out;
}

Image blend_boundary(const Image& base, const Image& donor, double strength, std::mt19937_64& rng) {
  const double s = static_cast<double>(base.height);
  const double cx = s / 2 + uniform(rng, -s / 8, s / 8);
  const double cy = s / 2 + uniform(rng, -s / 8, s / 8);
  const double rx = uniform(rng, 0.2 * s, 0.35 * s);
  const double ry = uniform(rng, 0.2 * s, 0.35 * s);
  const double ring = 1.5 / std::min(rx, ry);
  const double alpha = std::min(1.0, strength);
  Image out = base;
  for (std::size_t y = 0; y < base.height; ++y)
    for (std::size_t x = 0; x < base.width; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
      const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
      const double r = std::sqrt(dx * dx + dy * dy);
      for (std::size_t c = 0; c < base.channels; ++c) {
        double v = base.at(c, y, x);
        if (r < 1.0) v = (1.0 - alpha) * v + alpha * donor.at(c, y, x);
        if (std::abs(r - 1.0) < ring) v += strength * kRingAmplitude;
        out.at(c, y, x) = v;
      }
    }
  clamp_into(out);
  return out;
}

}  // namespace

std::uint64_t entry_stream(std::uint64_t corpus_seed, std::size_t index) {
  return splitmix64(splitmix64(corpus_seed) ^ (0xD1B54A32D192ED03ULL * (index + 1)));
}

Image render_real(std::uint64_t stream, std::size_t size) {
  std::mt19937_64 rng(stream);
  Image img(3, size, size);
  const double s = static_cast<double>(size);
  std::array<double, 3> base{}, slope{};
  for (double& b : base) b = uniform(rng, 0.3, 0.7);
  for (double& g : slope) g = uniform(rng, -0.15, 0.15);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        img.at(c, y, x) = base[c] + slope[c] * ((static_cast<double>(y) + 0.5) / s - 0.5);

  const std::size_t blobs = uniform_index(rng, 3, 6);
  for (std::size_t b = 0; b < blobs; ++b) {
    const double cx = uniform(rng, 0.0, s);
    const double cy = uniform(rng, 0.0, s);
    const double sigma = uniform(rng, 0.1 * s, 0.3 * s);
    std::array<double, 3> amp{};
    for (double& a : amp) a = uniform(rng, -0.2, 0.2);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) += amp[c] * g;
      }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const Plane noise = gaussian_blur(white_noise(rng, size), 2.0);
    for (std::size_t i = 0; i < img.plane_size(); ++i)
      img.pixels[c * img.plane_size() + i] += 0.25 * noise.values[i];
  }
  clamp_into(img);
  return img;
}

Image apply_family(const SyntheticFamily& family, const Image& base, std::uint64_t stream,
                   const Image* donor) {
  if (family.artifact_strength < 0.0 || !std::isfinite(family.artifact_strength))
    throw std::invalid_argument("artifact strength must be finite and non-negative");
  if (family.kind == FamilyKind::smooth_real || family.artifact_strength == 0.0) return base;
  std::mt19937_64 rng(stream);
  switch (family.kind) {
    case FamilyKind::grid_artifact_gan: return grid_artifact(base, family.artifact_strength, rng);
    case FamilyKind::low_artifact_diffusion:
      return high_frequency_residual(base, family.artifact_strength, rng);
    case FamilyKind::patch_edit_am: return patch_edit(base, family.artifact_strength, rng);
    case FamilyKind::blend_boundary_fs: {
      if (!donor) throw std::invalid_argument("face swap needs a donor image");
      return blend_boundary(base, *donor, family.artifact_strength, rng);
    }
    case FamilyKind::smooth_real: break;
  }
  return base;
}

Corpus generate_corpus(const CorpusSpec& spec) {
  if (spec.image_size == 0 || spec.image_size % 32 != 0)
    throw std::invalid_argument("image_size must be a positive multiple of 32");
  const std::size_t reals = spec.count(FamilyKind::smooth_real);
  if (reals == 0 &&
      (spec.count(FamilyKind::patch_edit_am) > 0 || spec.count(FamilyKind::blend_boundary_fs) > 0))
    throw std::invalid_argument("attribute-edit and face-swap entries need at least one smooth_real");

  Corpus corpus;
  std::size_t index = 0;
  for (FamilyKind family : kAllFamilies) {
    const SyntheticFamily fam{family, spec.artifact_strength(family)};
    for (std::size_t i = 0; i < spec.count(family); ++i, ++index) {
      const std::uint64_t stream = entry_stream(spec.seed, index);
      ManifestEntry e;
      char name[32];
      std::snprintf(name, sizeof name, "%06zu.ppm", i);
      e.path = std::string(family_dir(family)) + "/" + name;
      e.label = family_label(family);
      Image img;
      switch (family) {
        case FamilyKind::smooth_real:
          img = render_real(stream, spec.image_size);
          e.identity = static_cast<std::int64_t>(i);
          break;
        case FamilyKind::grid_artifact_gan:
        case FamilyKind::low_artifact_diffusion:
          img = apply_family(fam, render_real(stream, spec.image_size), splitmix64(stream));
          break;
        case FamilyKind::patch_edit_am:
        case FamilyKind::blend_boundary_fs: {
          std::mt19937_64 pick(stream);
          const std::size_t b = uniform_index(pick, 0, reals - 1);
          const Image& base = corpus.images[b];
          Image donor;
          if (reals > 1) {
            const std::size_t d = (b + 1 + uniform_index(pick, 0, reals - 2)) % reals;
            donor = corpus.images[d];
          } else {
            donor = render_real(pick(), spec.image_size);
          }
          img = apply_family(fam, base, splitmix64(stream), &donor);
          e.identity = static_cast<std::int64_t>(b);
          break;
        }
      }
      corpus.entries.push_back(std::move(e));
      corpus.images.push_back(std::move(img));
    }
  }
  corpus.entries = split_corpus(std::move(corpus.entries), spec.ratios, spec.seed);
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const std::filesystem::path path = dir / corpus.entries[i].path;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create " + path.parent_path().string() + ": " + ec.message());
    write_pnm(path, corpus.images[i]);
  }
  write_manifest(dir / "manifest.tsv", corpus.entries);
}

void CorpusSpec::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("gen.", 0) != 0) continue;
    const std::string rest = key.substr(4);
    if (rest == "image_size") {
      const long long v = parse_int(key, value);
      if (v <= 0) throw ConfigError("gen.image_size must be positive");
      image_size = static_cast<std::size_t>(v);
    } else if (rest == "split") {
      std::array<double, 3> r{};
      std::size_t start = 0;
      for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t comma = value.find(',', start);
        if ((i < 2) == (comma == std::string::npos))
          throw ConfigError("gen.split needs three comma-separated ratios");
        r[i] = parse_double(key, value.substr(start, comma == std::string::npos ? value.npos : comma - start));
        start = comma + 1;
      }
      ratios = {r[0], r[1], r[2]};
    } else if (rest.rfind("strength.", 0) == 0) {
      FamilyKind f;
      try {
        f = parse_family(rest.substr(9));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("unknown config key '" + key + "'");
      }
      artifact_strength(f) = parse_double(key, value);
    } else {
      FamilyKind f;
      try {
        f = parse_family(rest);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("unknown config key '" + key + "'");
      }
      const long long v = parse_int(key, value);
      if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
      count(f) = static_cast<std::size_t>(v);
    }
  }
}

void CorpusSpec::export_to(KeyValues& kv) const {
  for (FamilyKind f : kAllFamilies) {
    kv.set("gen." + std::string(family_name(f)), std::to_string(count(f)));
    kv.set("gen.strength." + std::string(family_name(f)), format_double(artifact_strength(f)));
  }
  kv.set("gen.image_size", std::to_string(image_size));
  kv.set("gen.split", format_double(ratios.train) + "," + format_double(ratios.val) + "," +
                          format_double(ratios.test));
}

}  // namespace cael
