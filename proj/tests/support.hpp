#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aed/config.hpp"
#include "aed/image.hpp"

namespace aed::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Smooth random texture: uniform noise blurred by a box filter, rescaled to [lo, hi].
Gray8 noise_texture(int width, int height, std::uint64_t seed, int blur = 2, int lo = 20, int hi = 235);

/// Copies `src` shifted by (dx, dy); uncovered pixels are clamped from the edge.
Gray8 shifted(const Gray8& src, int dx, int dy);

/// Crop of `src` with origin (x, y).
Gray8 crop(const Gray8& src, int x, int y, int width, int height);

/// A walking-crowd scene: `lanes` agents on horizontal lanes, alternating direction, speed 1.
SceneSpec crowd_scene(const std::string& id, int frames, std::uint64_t seed, int lanes = 6);

/// Error code thrown by `fn`, nullopt when it returns normally.
inline std::optional<Errc> error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Tiny generator/discriminator pair on 16x16 patches for gradient checks (well under 10k trainable parameters).
struct ReferenceNetwork {
  GeneratorSpec generator;
  DiscriminatorSpec discriminator;
  int patch_size = 16;
};
ReferenceNetwork reference_network();

/// Patches of uniform values in [0, 1].
std::vector<Patch> random_patches(std::size_t count, int size, std::uint64_t seed);

/// Small networks for fast tests (32x32 patches).
PipelineConfig small_config();

}  // namespace aed::testing
