#pragma once

#include <cstdint>
#include <vector>

#include "aed/image.hpp"

namespace aed {

/// Dense per-pixel displacement in px/frame.
struct FlowField {
  FloatImage u;
  FloatImage v;

  [[nodiscard]] Size size() const { return u.size(); }
};

/// hue = atan2(v, u) mod 2pi (0 for a zero vector), magnitude = |(u, v)|.
struct FlowPolar {
  FloatImage hue;
  FloatImage magnitude;

  [[nodiscard]] Size size() const { return hue.size(); }
};

struct FarnebackParams {
  int poly_n = 7;
  double poly_sigma = 1.5;
  int pyramid_levels = 3;
  double pyramid_scale = 0.5;
  int window = 15;
  int iterations = 3;

  void validate() const;
};

/// Two-frame dense flow by quadratic polynomial expansion, coarse to fine.
FlowField farneback(const Gray8& prev, const Gray8& next, const FarnebackParams& params = {});

/// Motion of frame `cur` relative to `prev`, sampled on the pixel grid of `cur`:
/// the negated flow from `cur` back to `prev`. Keeps flagged motion on the object's current position.
FlowField current_frame_flow(const Gray8& prev, const Gray8& cur, const FarnebackParams& params = {});

FlowPolar to_polar(const FlowField& flow);

/// HSV visualization: hue -> H, magnitude / max_magnitude -> V, S = 1. Returns interleaved RGB.
/// A non-positive max_magnitude normalizes by the frame maximum.
std::vector<std::uint8_t> flow_to_rgb(const FlowPolar& polar, double max_magnitude = 0.0);

namespace detail {

/// Per-pixel quadratic fit f(p + x) ~ c + b.x + x'Ax, stored as (b1, b2, a11, a22, a12)
/// with A = [[a11, a12/2], [a12/2, a22]]. Exposed for testing.
struct PolyExpansion {
  Size size;
  std::vector<float> coeffs;  // 5 per pixel
};

PolyExpansion poly_expand(const FloatImage& image, int poly_n, double sigma);

}  // namespace detail

}  // namespace aed
