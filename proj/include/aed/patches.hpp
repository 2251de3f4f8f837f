#pragma once

#include <vector>

#include "aed/preprocess.hpp"

namespace aed {

struct GridSpec {
  int patch_size = 32;
  int stride = 32;

  void validate() const;
};

/// One grid cell cut from a spatio-temporal stack.
struct Patch {
  std::vector<float> data;  // 3 x patch_size x patch_size, channel-major
  int x = 0;                // origin (top-left), pixels
  int y = 0;
  int t = 0;
  int size = 0;
  double fg_ratio = 0.0;
};

/// Grid cells fully inside the frame whose foreground fraction is at least rho_min, row-major.
std::vector<Patch> extract(const SpatioTemporalStack& stack, const ForegroundMask& mask, const GridSpec& grid,
                           double rho_min);

}  // namespace aed
