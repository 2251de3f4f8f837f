#include "aed/patches.hpp"

#include <algorithm>

namespace aed {

void GridSpec::validate() const {
  if (patch_size < 8) throw Error(Errc::invalid_argument, "patch_size must be >= 8");
  if (stride < 1 || stride > patch_size) throw Error(Errc::invalid_argument, "stride must be in [1, patch_size]");
}

std::vector<Patch> extract(const SpatioTemporalStack& stack, const ForegroundMask& mask, const GridSpec& grid,
                           double rho_min) {
  grid.validate();
  if (rho_min < 0.0 || rho_min > 1.0) throw Error(Errc::invalid_argument, "rho_min must be in [0,1]");
  require_same_size(stack.size(), mask.size(), "patch mask");
  const Size frame = stack.size();
  const int p = grid.patch_size;
  if (p > frame.width || p > frame.height) {
    throw Error(Errc::invalid_argument, "patch size " + std::to_string(p) + " exceeds the frame");
  }

  const double area = static_cast<double>(p) * p;
  std::vector<Patch> out;
  for (int y0 = 0; y0 + p <= frame.height; y0 += grid.stride) {
    for (int x0 = 0; x0 + p <= frame.width; x0 += grid.stride) {
      std::size_t fg = 0;
      for (int y = y0; y < y0 + p; ++y) {
        const auto row = mask.row(y);
        fg += static_cast<std::size_t>(std::count_if(row.begin() + x0, row.begin() + x0 + p, [](auto v) { return v != 0; }));
      }
      const double ratio = static_cast<double>(fg) / area;
      if (ratio < rho_min) continue;

      Patch patch;
      patch.x = x0;
      patch.y = y0;
      patch.t = stack.t;
      patch.size = p;
      patch.fg_ratio = ratio;
      patch.data.resize(static_cast<std::size_t>(3 * p * p));
      auto dst = patch.data.begin();
      for (const auto& channel : stack.channels) {
        for (int y = y0; y < y0 + p; ++y) {
          const auto row = channel.row(y);
          dst = std::copy(row.begin() + x0, row.begin() + x0 + p, dst);
        }
      }
      out.push_back(std::move(patch));
    }
  }
  return out;
}

}  // namespace aed
