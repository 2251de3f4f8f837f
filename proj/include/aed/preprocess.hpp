#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aed/image.hpp"

namespace aed {

/// Gradient magnitude in [0,1] (I_t).
using EdgeImage = FloatImage;
using ForegroundMask = Mask;

/// Three edge images <I_t, I_{t-2}, I_{t-4}>.
struct SpatioTemporalStack {
  std::array<EdgeImage, 3> channels;
  int t = 0;

  [[nodiscard]] Size size() const { return channels[0].size(); }
};

/// Frame offsets of the stack channels relative to t.
inline constexpr std::array<int, 3> kStackOffsets{0, 2, 4};

/// Histogram equalization by cumulative-histogram remapping. Constant images pass through.
Gray8 equalize(const Gray8& frame);

/// Streaming per-pixel temporal median (lower median for even counts).
class MedianBackground {
 public:
  void add(const Gray8& frame);
  [[nodiscard]] Gray8 median() const;
  [[nodiscard]] std::size_t count() const { return count_; }

 private:
  Size size_{};
  std::size_t count_ = 0;
  std::vector<std::uint32_t> histograms_;  // 256 bins per pixel
};

Gray8 background_model(std::span<const Gray8> frames);

/// Bit set where |frame - background| > tau_fg.
ForegroundMask foreground(const Gray8& frame, const Gray8& background, int tau_fg);

/// 3x3 Sobel magnitude normalized by its largest possible response, zeroed outside `mask`.
EdgeImage edges(const Gray8& frame, const ForegroundMask& mask);

/// Assembles <I_t, I_{t-2}, I_{t-4}> from time-indexed edge images.
SpatioTemporalStack stack(std::span<const EdgeImage> edges, int t);

}  // namespace aed
