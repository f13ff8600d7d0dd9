#include "cael/edges.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <numbers>

#include "cael/fft.hpp"

namespace cael {

std::string_view operator_name(OperatorKind op) {
  switch (op) {
    case OperatorKind::sobel: return "sobel";
    case OperatorKind::canny: return "canny";
    case OperatorKind::log: return "log";
    case OperatorKind::marr_hildreth: return "mh";
    case OperatorKind::dct: return "dct";
  }
  return "?";
}

OperatorKind parse_operator(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "sobel") return OperatorKind::sobel;
  if (s == "canny") return OperatorKind::canny;
  if (s == "log") return OperatorKind::log;
  if (s == "mh" || s == "marr_hildreth" || s == "marrhildreth") return OperatorKind::marr_hildreth;
  if (s == "dct") return OperatorKind::dct;
  throw std::invalid_argument("unknown edge operator '" + std::string(name) + "'");
}

const std::vector<OperatorKind>& all_operators() {
  static const std::vector<OperatorKind> ops{OperatorKind::sobel, OperatorKind::canny,
                                             OperatorKind::log, OperatorKind::marr_hildreth,
                                             OperatorKind::dct};
  return ops;
}

namespace {

// Reflect-101 index folding (-1 -> 1, n -> n-2), valid for any offset.
std::size_t reflect(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - m);
}

std::size_t gaussian_radius(double sigma) {
  return static_cast<std::size_t>(std::ceil(3.0 * sigma));
}

void require_size(const Plane& p, std::size_t support, std::string_view op) {
  if (p.height < support || p.width < support)
    throw ImageError(std::string(op) + ": image " + std::to_string(p.height) + "x" +
                     std::to_string(p.width) + " smaller than kernel support " +
                     std::to_string(support));
}

}  // namespace

Plane correlate_reflect(const Plane& src, const std::vector<double>& kernel, std::size_t kh,
                        std::size_t kw) {
  if (kh % 2 == 0 || kw % 2 == 0 || kernel.size() != kh * kw)
    throw std::invalid_argument("correlate_reflect: kernel must be odd-sized kh x kw");
  const long ry = static_cast<long>(kh / 2), rx = static_cast<long>(kw / 2);
  Plane out(src.height, src.width);
  for (std::size_t y = 0; y < src.height; ++y)
    for (std::size_t x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (long dy = -ry; dy <= ry; ++dy) {
        const std::size_t sy = reflect(static_cast<long>(y) + dy, src.height);
        for (long dx = -rx; dx <= rx; ++dx) {
          const std::size_t sx = reflect(static_cast<long>(x) + dx, src.width);
          acc += kernel[static_cast<std::size_t>((dy + ry) * static_cast<long>(kw) + dx + rx)] *
                 src.at(sy, sx);
        }
      }
      out.at(y, x) = acc;
    }
  return out;
}

SobelResponse sobel_raw(const Plane& gray) {
  require_size(gray, 3, "sobel");
  const std::size_t h = gray.height, w = gray.width;
  SobelResponse r{Plane(h, w), Plane(h, w), Plane(h, w)};
  // Differences first, so flat regions give exact zeros.
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t ym = reflect(static_cast<long>(y) - 1, h), yp = reflect(static_cast<long>(y) + 1, h);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xm = reflect(static_cast<long>(x) - 1, w), xp = reflect(static_cast<long>(x) + 1, w);
      const double dx0 = gray.at(ym, xp) - gray.at(ym, xm);
      const double dx1 = gray.at(y, xp) - gray.at(y, xm);
      const double dx2 = gray.at(yp, xp) - gray.at(yp, xm);
      const double dy0 = gray.at(yp, xm) - gray.at(ym, xm);
      const double dy1 = gray.at(yp, x) - gray.at(ym, x);
      const double dy2 = gray.at(yp, xp) - gray.at(ym, xp);
      r.gx.at(y, x) = dx0 + 2.0 * dx1 + dx2;
      r.gy.at(y, x) = dy0 + 2.0 * dy1 + dy2;
      r.magnitude.at(y, x) = std::hypot(r.gx.at(y, x), r.gy.at(y, x));
    }
  }
  return r;
}

Plane gaussian_blur(const Plane& gray, double sigma) {
  if (sigma <= 0.0) return gray;
  const std::size_t r = gaussian_radius(sigma);
  const std::size_t size = 2 * r + 1;
  std::vector<double> k(size);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(r);
    total += (k[i] = std::exp(-d * d / (2.0 * sigma * sigma)));
  }
  for (double& v : k) v /= total;
  return correlate_reflect(correlate_reflect(gray, k, 1, size), k, size, 1);
}

std::vector<double> log_kernel(double sigma, std::size_t& size) {
  const std::size_t r = gaussian_radius(sigma);
  size = 2 * r + 1;
  std::vector<double> k(size * size);
  const double s2 = sigma * sigma;
  double mean = 0.0;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = static_cast<double>(y) - static_cast<double>(r);
      const double dx = static_cast<double>(x) - static_cast<double>(r);
      const double q = (dx * dx + dy * dy) / (2.0 * s2);
      const double v = -(1.0 / (std::numbers::pi * s2 * s2)) * (1.0 - q) * std::exp(-q);
      k[y * size + x] = v;
      mean += v;
    }
  mean /= static_cast<double>(k.size());
  for (double& v : k) v -= mean;
  return k;
}

Plane log_raw(const Plane& gray, double sigma) {
  std::size_t size = 0;
  const auto k = log_kernel(sigma, size);
  require_size(gray, size, "log");
  return correlate_reflect(gray, k, size, size);
}

Plane marr_hildreth_raw(const Plane& gray, const EdgeParams& params) {
  const Plane resp = log_raw(gray, params.log_sigma);
  Plane out(gray.height, gray.width);
  double peak = 0.0;
  for (double v : resp.values) peak = std::max(peak, std::abs(v));
  const double t = params.zero_cross_threshold * peak;
  if (peak == 0.0) return out;
  auto check = [&](std::size_t y0, std::size_t x0, std::size_t y1, std::size_t x1) {
    const double a = resp.at(y0, x0), b = resp.at(y1, x1);
    if (a * b < 0.0 && std::abs(a - b) > t) {
      // Mark the pixel closer to the zero level.
      if (std::abs(a) <= std::abs(b))
        out.at(y0, x0) = 1.0;
      else
        out.at(y1, x1) = 1.0;
    }
  };
  for (std::size_t y = 0; y < gray.height; ++y)
    for (std::size_t x = 0; x < gray.width; ++x) {
      if (x + 1 < gray.width) check(y, x, y, x + 1);
      if (y + 1 < gray.height) check(y, x, y + 1, x);
    }
  return out;
}

Plane canny_raw(const Plane& gray, const EdgeParams& params) {
  require_size(gray, 2 * gaussian_radius(params.canny_sigma) + 1, "canny");
  const SobelResponse s = sobel_raw(gaussian_blur(gray, params.canny_sigma));
  const std::size_t h = gray.height, w = gray.width;
  Plane nms(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double m = s.magnitude.at(y, x);
      if (m == 0.0) continue;
      double angle = std::atan2(s.gy.at(y, x), s.gx.at(y, x)) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      long dy = 0, dx = 0;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1;
      } else if (angle < 67.5) {
        dy = 1;
        dx = 1;
      } else if (angle < 112.5) {
        dy = 1;
      } else {
        dy = 1;
        dx = -1;
      }
      const long yl = static_cast<long>(y), xl = static_cast<long>(x);
      const double n1 = s.magnitude.at(reflect(yl + dy, h), reflect(xl + dx, w));
      const double n2 = s.magnitude.at(reflect(yl - dy, h), reflect(xl - dx, w));
      if (m >= n1 && m >= n2) nms.at(y, x) = m;
    }
  const double peak = *std::max_element(nms.values.begin(), nms.values.end());
  Plane out(h, w);
  if (peak == 0.0) return out;
  const double high = params.canny_high * peak, low = params.canny_low * peak;
  std::deque<std::pair<std::size_t, std::size_t>> frontier;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      if (nms.at(y, x) >= high) {
        out.at(y, x) = 1.0;
        frontier.emplace_back(y, x);
      }
  while (!frontier.empty()) {
    const auto [y, x] = frontier.front();
    frontier.pop_front();
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        const long ny = static_cast<long>(y) + dy, nx = static_cast<long>(x) + dx;
        if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) || nx >= static_cast<long>(w)) continue;
        const auto uy = static_cast<std::size_t>(ny), ux = static_cast<std::size_t>(nx);
        if (out.at(uy, ux) == 0.0 && nms.at(uy, ux) >= low) {
          out.at(uy, ux) = 1.0;
          frontier.emplace_back(uy, ux);
        }
      }
  }
  return out;
}

Plane dct2(const Plane& gray) {
  Plane out(gray.height, gray.width);
  out.values = fft::dct2(gray.values, gray.height, gray.width);
  return out;
}

Plane dct_log_magnitude(const Plane& gray) {
  require_size(gray, 3, "dct");
  Plane c = dct2(gray);
  for (double& v : c.values) v = std::log1p(std::abs(v));
  return c;
}

std::size_t operator_support(OperatorKind op, const EdgeParams& params) {
  switch (op) {
    case OperatorKind::sobel:
    case OperatorKind::dct:
      return 3;
    case OperatorKind::canny:
      return 2 * gaussian_radius(params.canny_sigma) + 1;
    case OperatorKind::log:
    case OperatorKind::marr_hildreth:
      return 2 * gaussian_radius(params.log_sigma) + 1;
  }
  return 3;
}

Image edge_transform(const Image& img, OperatorKind op, const EdgeParams& params) {
  const Plane gray = to_gray(img);
  Plane raw;
  switch (op) {
    case OperatorKind::sobel: raw = sobel_raw(gray).magnitude; break;
    case OperatorKind::canny: raw = canny_raw(gray, params); break;
    case OperatorKind::log: raw = log_raw(gray, params.log_sigma); break;
    case OperatorKind::marr_hildreth: raw = marr_hildreth_raw(gray, params); break;
    case OperatorKind::dct: raw = dct_log_magnitude(gray); break;
  }
  return plane_to_image(minmax_normalize(raw));
}

}  // namespace cael
