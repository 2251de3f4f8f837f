#include "aed/optflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace aed {
namespace {

using detail::PolyExpansion;

FloatImage to_float(const Gray8& g) {
  FloatImage f(g.size());
  auto src = g.pixels();
  auto dst = f.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
  return f;
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

std::vector<float> gaussian_kernel(double sigma, int radius) {
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = static_cast<float>(w);
    sum += w;
  }
  for (auto& w : k) w = static_cast<float>(w / sum);
  return k;
}

FloatImage gaussian_blur(const FloatImage& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const auto k = gaussian_kernel(sigma, radius);
  const int w = src.width(), h = src.height();
  FloatImage tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float s = 0.f;
      for (int i = -radius; i <= radius; ++i) s += k[static_cast<std::size_t>(i + radius)] * src(clampi(x + i, 0, w - 1), y);
      tmp(x, y) = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float s = 0.f;
      for (int i = -radius; i <= radius; ++i) s += k[static_cast<std::size_t>(i + radius)] * tmp(x, clampi(y + i, 0, h - 1));
      out(x, y) = s;
    }
  }
  return out;
}

float sample_bilinear(const FloatImage& img, float x, float y) {
  const int w = img.width(), h = img.height();
  x = std::clamp(x, 0.f, static_cast<float>(w - 1));
  y = std::clamp(y, 0.f, static_cast<float>(h - 1));
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const float fx = x - x0, fy = y - y0;
  const float top = img(x0, y0) + fx * (img(x1, y0) - img(x0, y0));
  const float bottom = img(x0, y1) + fx * (img(x1, y1) - img(x0, y1));
  return top + fy * (bottom - top);
}

FloatImage resize_bilinear(const FloatImage& src, Size dst_size) {
  FloatImage out(dst_size);
  const float sx = static_cast<float>(src.width()) / static_cast<float>(dst_size.width);
  const float sy = static_cast<float>(src.height()) / static_cast<float>(dst_size.height);
  for (int y = 0; y < dst_size.height; ++y) {
    for (int x = 0; x < dst_size.width; ++x) {
      out(x, y) = sample_bilinear(src, (x + 0.5f) * sx - 0.5f, (y + 0.5f) * sy - 0.5f);
    }
  }
  return out;
}

/// Inverts a symmetric positive-definite 6x6 matrix by Gauss-Jordan elimination.
std::array<std::array<double, 6>, 6> invert6(std::array<std::array<double, 6>, 6> a) {
  std::array<std::array<double, 6>, 6> inv{};
  for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < 6; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 6; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = a[col][col];
    for (int c = 0; c < 6; ++c) {
      a[col][c] /= d;
      inv[col][c] /= d;
    }
    for (int r = 0; r < 6; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (int c = 0; c < 6; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

/// Box-filters `planes` interleaved channels per pixel with a clamped window of side `window`.
void box_filter(std::vector<float>& data, Size size, int channels, int window) {
  const int r = window / 2;
  const int w = size.width, h = size.height;
  std::vector<float> tmp(data.size());
  std::vector<double> acc(static_cast<std::size_t>(channels));
  for (int y = 0; y < h; ++y) {
    const float* row = &data[static_cast<std::size_t>(y) * w * channels];
    float* out = &tmp[static_cast<std::size_t>(y) * w * channels];
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = -r; i <= r; ++i) {
      const int xi = clampi(i, 0, w - 1);
      for (int c = 0; c < channels; ++c) acc[c] += row[xi * channels + c];
    }
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) out[x * channels + c] = static_cast<float>(acc[c]);
      const int add = clampi(x + r + 1, 0, w - 1), sub = clampi(x - r, 0, w - 1);
      for (int c = 0; c < channels; ++c) acc[c] += row[add * channels + c] - row[sub * channels + c];
    }
  }
  const std::size_t stride = static_cast<std::size_t>(w) * channels;
  for (int x = 0; x < w; ++x) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = -r; i <= r; ++i) {
      const int yi = clampi(i, 0, h - 1);
      for (int c = 0; c < channels; ++c) acc[c] += tmp[yi * stride + x * channels + c];
    }
    for (int y = 0; y < h; ++y) {
      for (int c = 0; c < channels; ++c) data[y * stride + x * channels + c] = static_cast<float>(acc[c]);
      const int add = clampi(y + r + 1, 0, h - 1), sub = clampi(y - r, 0, h - 1);
      for (int c = 0; c < channels; ++c) acc[c] += tmp[add * stride + x * channels + c] - tmp[sub * stride + x * channels + c];
    }
  }
}

/// Builds the averaged normal equations for the displacement at every pixel and solves them.
void update_flow(const PolyExpansion& r0, const PolyExpansion& r1, FloatImage& u, FloatImage& v, int window) {
  const Size size = r0.size;
  const int w = size.width, h = size.height;
  std::vector<float> m(size.area() * 5);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const float dx = u(x, y), dy = v(x, y);
      const float* p0 = &r0.coeffs[i * 5];

      // Coefficients of the second frame at the displaced position (bilinear, clamped).
      std::array<float, 5> p1{};
      const float fx = std::clamp(x + dx, 0.f, static_cast<float>(w - 1));
      const float fy = std::clamp(y + dy, 0.f, static_cast<float>(h - 1));
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const float ax = fx - x0, ay = fy - y0;
      const float w00 = (1 - ax) * (1 - ay), w10 = ax * (1 - ay), w01 = (1 - ax) * ay, w11 = ax * ay;
      const float* c00 = &r1.coeffs[(static_cast<std::size_t>(y0) * w + x0) * 5];
      const float* c10 = &r1.coeffs[(static_cast<std::size_t>(y0) * w + x1) * 5];
      const float* c01 = &r1.coeffs[(static_cast<std::size_t>(y1) * w + x0) * 5];
      const float* c11 = &r1.coeffs[(static_cast<std::size_t>(y1) * w + x1) * 5];
      for (int k = 0; k < 5; ++k) p1[k] = w00 * c00[k] + w10 * c10[k] + w01 * c01[k] + w11 * c11[k];

      const float a11 = 0.5f * (p0[2] + p1[2]);
      const float a22 = 0.5f * (p0[3] + p1[3]);
      const float a12 = 0.25f * (p0[4] + p1[4]);  // off-diagonal of A
      const float db1 = -0.5f * (p1[0] - p0[0]) + a11 * dx + a12 * dy;
      const float db2 = -0.5f * (p1[1] - p0[1]) + a12 * dx + a22 * dy;

      float* out = &m[i * 5];
      out[0] = a11 * a11 + a12 * a12;
      out[1] = (a11 + a22) * a12;
      out[2] = a22 * a22 + a12 * a12;
      out[3] = a11 * db1 + a12 * db2;
      out[4] = a12 * db1 + a22 * db2;
    }
  }

  box_filter(m, size, 5, window);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float* g = &m[(static_cast<std::size_t>(y) * w + x) * 5];
      const double g11 = g[0], g12 = g[1], g22 = g[2], h1 = g[3], h2 = g[4];
      const double idet = 1.0 / (g11 * g22 - g12 * g12 + 1e-3);
      u(x, y) = static_cast<float>((g22 * h1 - g12 * h2) * idet);
      v(x, y) = static_cast<float>((g11 * h2 - g12 * h1) * idet);
    }
  }
}

}  // namespace

namespace detail {

PolyExpansion poly_expand(const FloatImage& image, int poly_n, double sigma) {
  const int n = poly_n / 2;
  const auto g = gaussian_kernel(sigma, n);

  // Weighted Gram matrix of the basis (1, x, y, x^2, y^2, xy).
  std::array<std::array<double, 6>, 6> gram{};
  for (int y = -n; y <= n; ++y) {
    for (int x = -n; x <= n; ++x) {
      const double wgt = double(g[x + n]) * g[y + n];
      const std::array<double, 6> phi{1.0, double(x), double(y), double(x) * x, double(y) * y, double(x) * y};
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) gram[a][b] += wgt * phi[a] * phi[b];
      }
    }
  }
  const auto ginv = invert6(gram);

  const int w = image.width(), h = image.height();
  // Vertical pass: sum_y g(y) y^k f for k = 0, 1, 2.
  std::vector<float> vert(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float s0 = 0, s1 = 0, s2 = 0;
      for (int k = -n; k <= n; ++k) {
        const float f = image(x, clampi(y + k, 0, h - 1)) * g[k + n];
        s0 += f;
        s1 += f * k;
        s2 += f * k * k;
      }
      float* o = &vert[(static_cast<std::size_t>(y) * w + x) * 3];
      o[0] = s0;
      o[1] = s1;
      o[2] = s2;
    }
  }

  PolyExpansion out{image.size(), std::vector<float>(static_cast<std::size_t>(w) * h * 5)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double m1 = 0, mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int k = -n; k <= n; ++k) {
        const float* vsum = &vert[(static_cast<std::size_t>(y) * w + clampi(x + k, 0, w - 1)) * 3];
        const double gk = g[k + n];
        m1 += gk * vsum[0];
        mx += gk * k * vsum[0];
        mxx += gk * k * k * vsum[0];
        my += gk * vsum[1];
        mxy += gk * k * vsum[1];
        myy += gk * vsum[2];
      }
      const std::array<double, 6> moments{m1, mx, my, mxx, myy, mxy};
      float* o = &out.coeffs[(static_cast<std::size_t>(y) * w + x) * 5];
      for (int c = 0; c < 5; ++c) {
        double r = 0.0;
        for (int k = 0; k < 6; ++k) r += ginv[c + 1][k] * moments[k];
        o[c] = static_cast<float>(r);
      }
    }
  }
  return out;
}

}  // namespace detail

void FarnebackParams::validate() const {
  if (poly_n < 3 || poly_n % 2 == 0) throw Error(Errc::invalid_argument, "poly_n must be odd and >= 3");
  if (!(poly_sigma > 0.0)) throw Error(Errc::invalid_argument, "poly_sigma must be positive");
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0)) throw Error(Errc::invalid_argument, "pyramid_scale must be in (0,1)");
  if (pyramid_levels < 1) throw Error(Errc::invalid_argument, "pyramid_levels must be >= 1");
  if (window < 1) throw Error(Errc::invalid_argument, "window must be >= 1");
  if (iterations < 1) throw Error(Errc::invalid_argument, "iterations must be >= 1");
}

FlowField farneback(const Gray8& prev, const Gray8& next, const FarnebackParams& params) {
  params.validate();
  require_same_size(prev.size(), next.size(), "optical flow");
  const Size full = prev.size();
  if (full.width < params.poly_n || full.height < params.poly_n) {
    throw Error(Errc::invalid_argument, "frame smaller than the polynomial neighborhood");
  }

  const FloatImage f0 = to_float(prev), f1 = to_float(next);

  // Drop levels that would be smaller than twice the neighborhood.
  int levels = 1;
  double scale = 1.0;
  for (int k = 1; k < params.pyramid_levels; ++k) {
    scale *= params.pyramid_scale;
    if (std::min(full.width, full.height) * scale < 2.0 * params.poly_n) break;
    ++levels;
  }

  FloatImage u, v;
  for (int level = levels - 1; level >= 0; --level) {
    const double s = std::pow(params.pyramid_scale, level);
    const Size size{std::max(1, static_cast<int>(std::lround(full.width * s))),
                    std::max(1, static_cast<int>(std::lround(full.height * s)))};

    FloatImage i0 = f0, i1 = f1;
    if (level > 0) {
      const double sigma = (1.0 / s - 1.0) * 0.5;
      i0 = resize_bilinear(gaussian_blur(f0, sigma), size);
      i1 = resize_bilinear(gaussian_blur(f1, sigma), size);
    }

    if (u.empty()) {
      u = FloatImage(size);
      v = FloatImage(size);
    } else {
      const float up_x = static_cast<float>(size.width) / static_cast<float>(u.width());
      const float up_y = static_cast<float>(size.height) / static_cast<float>(u.height());
      u = resize_bilinear(u, size);
      v = resize_bilinear(v, size);
      for (auto& x : u.pixels()) x *= up_x;
      for (auto& y : v.pixels()) y *= up_y;
    }

    const auto r0 = detail::poly_expand(i0, params.poly_n, params.poly_sigma);
    const auto r1 = detail::poly_expand(i1, params.poly_n, params.poly_sigma);
    for (int it = 0; it < params.iterations; ++it) update_flow(r0, r1, u, v, params.window);
  }
  return {std::move(u), std::move(v)};
}

FlowField current_frame_flow(const Gray8& prev, const Gray8& cur, const FarnebackParams& params) {
  auto flow = farneback(cur, prev, params);
  for (auto& x : flow.u.pixels()) x = -x;
  for (auto& x : flow.v.pixels()) x = -x;
  return flow;
}

FlowPolar to_polar(const FlowField& flow) {
  FlowPolar polar{FloatImage(flow.size()), FloatImage(flow.size())};
  auto u = flow.u.pixels();
  auto v = flow.v.pixels();
  auto hue = polar.hue.pixels();
  auto mag = polar.magnitude.pixels();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i], dv = v[i];
    mag[i] = static_cast<float>(std::hypot(du, dv));
    if (du == 0.0 && dv == 0.0) {
      hue[i] = 0.f;
      continue;
    }
    double a = std::atan2(dv, du);
    if (a < 0) a += two_pi;
    if (a >= two_pi) a = 0.0;
    hue[i] = static_cast<float>(a);
    if (hue[i] >= static_cast<float>(two_pi)) hue[i] = 0.f;
  }
  return polar;
}

std::vector<std::uint8_t> flow_to_rgb(const FlowPolar& polar, double max_magnitude) {
  auto hue = polar.hue.pixels();
  auto mag = polar.magnitude.pixels();
  if (max_magnitude <= 0.0) {
    for (auto m : mag) max_magnitude = std::max(max_magnitude, double(m));
    if (max_magnitude <= 0.0) max_magnitude = 1.0;
  }
  std::vector<std::uint8_t> rgb(hue.size() * 3);
  for (std::size_t i = 0; i < hue.size(); ++i) {
    const double h = hue[i] / (2.0 * std::numbers::pi) * 6.0;
    const double val = std::min(1.0, mag[i] / max_magnitude);
    const int sector = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    const double p = 0.0, q = val * (1 - f), t = val * f;
    double r = 0, g = 0, b = 0;
    switch (sector) {
      case 0: r = val, g = t, b = p; break;
      case 1: r = q, g = val, b = p; break;
      case 2: r = p, g = val, b = t; break;
      case 3: r = p, g = q, b = val; break;
      case 4: r = t, g = p, b = val; break;
      default: r = val, g = p, b = q; break;
    }
    rgb[i * 3 + 0] = static_cast<std::uint8_t>(std::lround(r * 255));
    rgb[i * 3 + 1] = static_cast<std::uint8_t>(std::lround(g * 255));
    rgb[i * 3 + 2] = static_cast<std::uint8_t>(std::lround(b * 255));
  }
  return rgb;
}

}  // namespace aed
