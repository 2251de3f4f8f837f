#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace aed::nn {

struct Shape3 {
  int c = 0, h = 0, w = 0;
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

// Square-kernel convolution with "same" zero padding; weight layout [out_c][in_c][k][k].
// Both directions go through an im2col matrix of shape [in_c * k * k][h * w].

namespace detail {

template <class T>
void im2col(const T* in, Shape3 s, int k, T* col) {
  const int pad = k / 2;
  const std::size_t plane = s.plane();
  for (int ci = 0; ci < s.c; ++ci) {
    const T* src = in + ci * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        const int dy = ky - pad, dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(s.w, s.w - dx);
        for (int y = 0; y < s.h; ++y) {
          T* drow = dst + y * s.w;
          const int sy = y + dy;
          if (sy < 0 || sy >= s.h) {
            std::fill(drow, drow + s.w, T(0));
            continue;
          }
          const T* srow = src + sy * s.w + dx;
          for (int x = 0; x < x0; ++x) drow[x] = T(0);
          for (int x = x0; x < x1; ++x) drow[x] = srow[x];
          for (int x = std::max(x1, x0); x < s.w; ++x) drow[x] = T(0);
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* col, Shape3 s, int k, T* grad_in) {
  const int pad = k / 2;
  const std::size_t plane = s.plane();
  for (int ci = 0; ci < s.c; ++ci) {
    T* dst = grad_in + ci * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        const int dy = ky - pad, dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(s.w, s.w - dx);
        const int y0 = std::max(0, -dy), y1 = std::min(s.h, s.h - dy);
        for (int y = y0; y < y1; ++y) {
          T* drow = dst + (y + dy) * s.w + dx;
          const T* srow = src + y * s.w;
          for (int x = x0; x < x1; ++x) drow[x] += srow[x];
        }
      }
    }
  }
}

template <class T>
std::vector<T>& scratch(std::size_t n) {
  thread_local std::vector<T> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace detail

template <class T>
void conv2d_forward(std::span<const T> in, Shape3 s, std::span<const T> weight, std::span<const T> bias, int out_c,
                    int k, std::span<T> out) {
  const std::size_t plane = s.plane();
  const std::size_t rows = static_cast<std::size_t>(s.c) * k * k;
  auto& col = detail::scratch<T>(rows * plane);
  detail::im2col(in.data(), s, k, col.data());
  for (int co = 0; co < out_c; ++co) {
    T* o = out.data() + co * plane;
    std::fill(o, o + plane, bias[static_cast<std::size_t>(co)]);
    const T* w = weight.data() + static_cast<std::size_t>(co) * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const T wv = w[r];
      if (wv == T(0)) continue;
      const T* c = col.data() + r * plane;
      for (std::size_t j = 0; j < plane; ++j) o[j] += wv * c[j];
    }
  }
}

/// Any of grad_in / grad_weight / grad_bias may be empty to skip it. Gradients accumulate.
template <class T>
void conv2d_backward(std::span<const T> in, Shape3 s, std::span<const T> weight, int out_c, int k,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  const std::size_t plane = s.plane();
  const std::size_t rows = static_cast<std::size_t>(s.c) * k * k;
  if (!grad_bias.empty()) {
    for (int co = 0; co < out_c; ++co) {
      const T* g = grad_out.data() + co * plane;
      T acc = 0;
      for (std::size_t j = 0; j < plane; ++j) acc += g[j];
      grad_bias[static_cast<std::size_t>(co)] += acc;
    }
  }
  if (!grad_weight.empty()) {
    auto& col = detail::scratch<T>(rows * plane);
    detail::im2col(in.data(), s, k, col.data());
    for (int co = 0; co < out_c; ++co) {
      const T* g = grad_out.data() + co * plane;
      T* gw = grad_weight.data() + static_cast<std::size_t>(co) * rows;
      for (std::size_t r = 0; r < rows; ++r) {
        const T* c = col.data() + r * plane;
        T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
        std::size_t j = 0;
        for (; j + 4 <= plane; j += 4) {
          a0 += g[j] * c[j];
          a1 += g[j + 1] * c[j + 1];
          a2 += g[j + 2] * c[j + 2];
          a3 += g[j + 3] * c[j + 3];
        }
        for (; j < plane; ++j) a0 += g[j] * c[j];
        gw[r] += (a0 + a1) + (a2 + a3);
      }
    }
  }
  if (!grad_in.empty()) {
    auto& gcol = detail::scratch<T>(rows * plane);
    std::fill(gcol.begin(), gcol.begin() + static_cast<std::ptrdiff_t>(rows * plane), T(0));
    for (int co = 0; co < out_c; ++co) {
      const T* g = grad_out.data() + co * plane;
      const T* w = weight.data() + static_cast<std::size_t>(co) * rows;
      for (std::size_t r = 0; r < rows; ++r) {
        const T wv = w[r];
        if (wv == T(0)) continue;
        T* c = gcol.data() + r * plane;
        for (std::size_t j = 0; j < plane; ++j) c[j] += wv * g[j];
      }
    }
    detail::col2im_add(gcol.data(), s, k, grad_in.data());
  }
}

/// 2x2 max pooling with stride 2 (floor); records the flat argmax of each output.
template <class T>
Shape3 maxpool2_forward(std::span<const T> in, Shape3 s, std::vector<T>& out, std::vector<int>* argmax) {
  const Shape3 o{s.c, s.h / 2, s.w / 2};
  out.assign(o.size(), T(0));
  if (argmax) argmax->assign(o.size(), 0);
  for (int c = 0; c < s.c; ++c) {
    for (int y = 0; y < o.h; ++y) {
      for (int x = 0; x < o.w; ++x) {
        int best = (c * s.h + 2 * y) * s.w + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (c * s.h + 2 * y + dy) * s.w + 2 * x + dx;
            if (in[static_cast<std::size_t>(idx)] > in[static_cast<std::size_t>(best)]) best = idx;
          }
        }
        const std::size_t oi = (static_cast<std::size_t>(c) * o.h + y) * o.w + x;
        out[oi] = in[static_cast<std::size_t>(best)];
        if (argmax) (*argmax)[oi] = best;
      }
    }
  }
  return o;
}

template <class T>
void maxpool2_backward(std::span<const T> grad_out, const std::vector<int>& argmax, std::span<T> grad_in) {
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[static_cast<std::size_t>(argmax[i])] += grad_out[i];
}

template <class T>
Shape3 upsample_forward(std::span<const T> in, Shape3 s, int factor, std::vector<T>& out) {
  const Shape3 o{s.c, s.h * factor, s.w * factor};
  out.resize(o.size());
  for (int c = 0; c < s.c; ++c) {
    for (int y = 0; y < o.h; ++y) {
      const T* irow = in.data() + (static_cast<std::size_t>(c) * s.h + y / factor) * s.w;
      T* orow = out.data() + (static_cast<std::size_t>(c) * o.h + y) * o.w;
      for (int x = 0; x < o.w; ++x) orow[x] = irow[x / factor];
    }
  }
  return o;
}

template <class T>
void upsample_backward(std::span<const T> grad_out, Shape3 s, int factor, std::span<T> grad_in) {
  const Shape3 o{s.c, s.h * factor, s.w * factor};
  for (int c = 0; c < s.c; ++c) {
    for (int y = 0; y < o.h; ++y) {
      T* irow = grad_in.data() + (static_cast<std::size_t>(c) * s.h + y / factor) * s.w;
      const T* orow = grad_out.data() + (static_cast<std::size_t>(c) * o.h + y) * o.w;
      for (int x = 0; x < o.w; ++x) irow[x / factor] += orow[x];
    }
  }
}

/// out = W in + b, W laid out [out][in].
template <class T>
void dense_forward(std::span<const T> in, std::span<const T> weight, std::span<const T> bias, std::span<T> out) {
  const std::size_t n_in = in.size();
  for (std::size_t o = 0; o < out.size(); ++o) {
    const T* w = weight.data() + o * n_in;
    T acc = bias[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * in[i];
    out[o] = acc;
  }
}

template <class T>
void dense_backward(std::span<const T> in, std::span<const T> weight, std::span<const T> grad_out,
                    std::span<T> grad_in, std::span<T> grad_weight, std::span<T> grad_bias) {
  const std::size_t n_in = in.size();
  for (std::size_t o = 0; o < grad_out.size(); ++o) {
    const T g = grad_out[o];
    if (!grad_bias.empty()) grad_bias[o] += g;
    if (g == T(0)) continue;
    if (!grad_weight.empty()) {
      T* gw = grad_weight.data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) gw[i] += g * in[i];
    }
    if (!grad_in.empty()) {
      const T* w = weight.data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) grad_in[i] += g * w[i];
    }
  }
}

/// Bilinear resize of every channel with half-pixel centers and clamped borders.
template <class T>
void resize_forward(std::span<const T> in, Shape3 s, int out_h, int out_w, std::vector<T>& out) {
  out.assign(static_cast<std::size_t>(s.c) * out_h * out_w, T(0));
  const double sy = static_cast<double>(s.h) / out_h, sx = static_cast<double>(s.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(s.h - 1));
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, s.h - 1);
    const T ay = static_cast<T>(fy - y0);
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(s.w - 1));
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, s.w - 1);
      const T ax = static_cast<T>(fx - x0);
      for (int c = 0; c < s.c; ++c) {
        const T* p = in.data() + static_cast<std::size_t>(c) * s.plane();
        const T top = p[y0 * s.w + x0] * (1 - ax) + p[y0 * s.w + x1] * ax;
        const T bottom = p[y1 * s.w + x0] * (1 - ax) + p[y1 * s.w + x1] * ax;
        out[(static_cast<std::size_t>(c) * out_h + y) * out_w + x] = top * (1 - ay) + bottom * ay;
      }
    }
  }
}

template <class T>
void resize_backward(std::span<const T> grad_out, Shape3 s, int out_h, int out_w, std::span<T> grad_in) {
  const double sy = static_cast<double>(s.h) / out_h, sx = static_cast<double>(s.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(s.h - 1));
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, s.h - 1);
    const T ay = static_cast<T>(fy - y0);
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(s.w - 1));
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, s.w - 1);
      const T ax = static_cast<T>(fx - x0);
      for (int c = 0; c < s.c; ++c) {
        T* p = grad_in.data() + static_cast<std::size_t>(c) * s.plane();
        const T g = grad_out[(static_cast<std::size_t>(c) * out_h + y) * out_w + x];
        p[y0 * s.w + x0] += g * (1 - ax) * (1 - ay);
        p[y0 * s.w + x1] += g * ax * (1 - ay);
        p[y1 * s.w + x0] += g * (1 - ax) * ay;
        p[y1 * s.w + x1] += g * ax * ay;
      }
    }
  }
}

template <class T>
T sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <class T>
T softplus(T x) {
  return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace aed::nn
