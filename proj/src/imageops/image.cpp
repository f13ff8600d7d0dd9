#include "cael/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace cael {

Image::Image(std::size_t c, std::size_t h, std::size_t w, double fill)
    : channels(c), height(h), width(w), pixels(c * h * w, fill) {
  if (c != 1 && c != 3) throw ImageError("image: channels must be 1 or 3, got " + std::to_string(c));
}

Plane to_gray(const Image& img) {
  Plane out(img.height, img.width);
  const std::size_t n = img.plane_size();
  if (img.channels == 1) {
    std::copy_n(img.pixels.begin(), n, out.values.begin());
    return out;
  }
  if (img.channels != 3) throw ImageError("to_gray: expected 1 or 3 channels");
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] =
        kLumaR * img.pixels[i] + kLumaG * img.pixels[n + i] + kLumaB * img.pixels[2 * n + i];
  return out;
}

Image plane_to_image(const Plane& p) {
  Image out(1, p.height, p.width);
  for (std::size_t i = 0; i < p.values.size(); ++i)
    out.pixels[i] = std::clamp(p.values[i], 0.0, 1.0);
  return out;
}

void clamp_unit(Image& img) {
  for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
}

Plane minmax_normalize(const Plane& p) {
  Plane out(p.height, p.width);
  if (p.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(p.values.begin(), p.values.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < p.values.size(); ++i) out.values[i] = (p.values[i] - *lo) / range;
  return out;
}

unsigned char quantize_u8(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

namespace {

std::string next_token(std::istream& is) {
  std::string tok;
  char ch;
  while (is.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(is, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ImageError("cannot open image: " + path.string());
  const std::string magic = next_token(is);
  std::size_t channels = 0;
  if (magic == "P6")
    channels = 3;
  else if (magic == "P5")
    channels = 1;
  else
    throw ImageError("unsupported PNM magic '" + magic + "': " + path.string());
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token(is));
    h = std::stoul(next_token(is));
    maxval = std::stoul(next_token(is));
  } catch (const std::exception&) {
    throw ImageError("malformed PNM header: " + path.string());
  }
  if (maxval != 255 || w == 0 || h == 0)
    throw ImageError("PNM must be 8-bit with positive size: " + path.string());
  std::vector<unsigned char> raw(w * h * channels);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw ImageError("PNM pixel data truncated: " + path.string());
  Image img(channels, h, w);
  const std::size_t n = w * h;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < channels; ++c)
      img.pixels[c * n + i] = raw[i * channels + c] / 255.0;
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ImageError("cannot write image: " + path.string());
  os << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  const std::size_t n = img.plane_size();
  std::vector<unsigned char> raw(n * img.channels);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < img.channels; ++c)
      raw[i * img.channels + c] = quantize_u8(img.pixels[c * n + i]);
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw ImageError("write failed: " + path.string());
}

}  // namespace cael
