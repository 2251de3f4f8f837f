#include "aed/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace aed {

Gray8 equalize(const Gray8& frame) {
  std::array<std::size_t, 256> hist{};
  for (auto v : frame.pixels()) ++hist[v];

  const std::size_t total = frame.pixel_count();
  std::size_t cdf_min = 0;
  for (auto c : hist) {
    if (c != 0) {
      cdf_min = c;
      break;
    }
  }
  if (total == 0 || cdf_min == total) return frame;

  std::array<std::uint8_t, 256> lut{};
  std::size_t cdf = 0;
  const double scale = 255.0 / static_cast<double>(total - cdf_min);
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    const double mapped = cdf > cdf_min ? static_cast<double>(cdf - cdf_min) * scale : 0.0;
    lut[v] = static_cast<std::uint8_t>(std::clamp(std::lround(mapped), 0L, 255L));
  }

  Gray8 out(frame.size());
  auto src = frame.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return out;
}

void MedianBackground::add(const Gray8& frame) {
  if (count_ == 0) {
    size_ = frame.size();
    histograms_.assign(size_.area() * 256, 0);
  }
  require_same_size(frame.size(), size_, "background frame");
  auto px = frame.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) ++histograms_[i * 256 + px[i]];
  ++count_;
}

Gray8 MedianBackground::median() const {
  if (count_ == 0) throw Error(Errc::empty_input, "background model needs at least one frame");
  Gray8 out(size_);
  const std::size_t rank = (count_ - 1) / 2;
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto* h = &histograms_[i * 256];
    std::size_t cum = 0;
    int v = 0;
    for (; v < 255; ++v) {
      cum += h[v];
      if (cum > rank) break;
    }
    dst[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

Gray8 background_model(std::span<const Gray8> frames) {
  MedianBackground acc;
  for (const auto& f : frames) acc.add(f);
  return acc.median();
}

ForegroundMask foreground(const Gray8& frame, const Gray8& background, int tau_fg) {
  require_same_size(frame.size(), background.size(), "foreground");
  ForegroundMask mask(frame.size());
  auto f = frame.pixels();
  auto b = background.pixels();
  auto m = mask.pixels();
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = std::abs(int{f[i]} - int{b[i]}) > tau_fg ? 1 : 0;
  return mask;
}

EdgeImage edges(const Gray8& frame, const ForegroundMask& mask) {
  require_same_size(frame.size(), mask.size(), "edges");
  constexpr double kMaxResponse = 4.0 * 255.0 * 1.4142135623730951;
  EdgeImage out(frame.size());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (!mask(x, y)) continue;
      auto p = [&](int dx, int dy) { return static_cast<int>(frame.at_clamped(x + dx, y + dy)); };
      const int gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const int gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      out(x, y) = static_cast<float>(std::sqrt(double(gx) * gx + double(gy) * gy) / kMaxResponse);
    }
  }
  return out;
}

SpatioTemporalStack stack(std::span<const EdgeImage> edge_images, int t) {
  if (t < kStackOffsets.back()) {
    throw Error(Errc::index_range, "spatio-temporal stack needs t >= 4, got t = " + std::to_string(t));
  }
  if (t >= static_cast<int>(edge_images.size())) {
    throw Error(Errc::index_range, "no edge image for frame " + std::to_string(t));
  }
  SpatioTemporalStack s;
  s.t = t;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& img = edge_images[static_cast<std::size_t>(t - kStackOffsets[c])];
    if (img.empty()) throw Error(Errc::index_range, "missing edge image for frame " + std::to_string(t - kStackOffsets[c]));
    if (c > 0) require_same_size(img.size(), s.channels[0].size(), "stack channel");
    s.channels[c] = img;
  }
  return s;
}

}  // namespace aed
