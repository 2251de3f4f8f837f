#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <numbers>
#include <random>

#include <unistd.h>

namespace aed::testing {
namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("aed-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Gray8 noise_texture(int width, int height, std::uint64_t seed, int blur, int lo, int hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> raw(static_cast<std::size_t>(width) * height);
  for (auto& v : raw) v = u(rng);
  std::vector<double> smooth(raw.size());
  double mn = 1e9, mx = -1e9;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0;
      int n = 0;
      for (int dy = -blur; dy <= blur; ++dy) {
        for (int dx = -blur; dx <= blur; ++dx) {
          const int xx = std::clamp(x + dx, 0, width - 1), yy = std::clamp(y + dy, 0, height - 1);
          acc += raw[static_cast<std::size_t>(yy) * width + xx];
          ++n;
        }
      }
      smooth[static_cast<std::size_t>(y) * width + x] = acc / n;
      mn = std::min(mn, acc / n);
      mx = std::max(mx, acc / n);
    }
  }
  Gray8 out(width, height);
  auto px = out.pixels();
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::lround(lo + (hi - lo) * (smooth[i] - mn) / (mx - mn)));
  }
  return out;
}

Gray8 shifted(const Gray8& src, int dx, int dy) {
  Gray8 out(src.size());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) out(x, y) = src.at_clamped(x - dx, y - dy);
  }
  return out;
}

Gray8 crop(const Gray8& src, int x0, int y0, int width, int height) {
  Gray8 out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out(x, y) = src(x0 + x, y0 + y);
  }
  return out;
}

SceneSpec crowd_scene(const std::string& id, int frames, std::uint64_t seed, int lanes) {
  SceneSpec s;
  s.id = id;
  s.num_frames = frames;
  s.seed = seed;
  s.background = {BackgroundSpec::Kind::noise, 90, 30, 7};
  for (int i = 0; i < lanes; ++i) {
    AgentSpec a;
    a.width = 8;
    a.height = 16;
    a.speed = 1.0;
    a.direction = i % 2 == 0 ? 0.0 : std::numbers::pi;
    a.x = static_cast<double>((seed * 37 + static_cast<std::uint64_t>(i) * 29) % 160);
    a.y = 20.0 + 18.0 * i;
    a.intensity = 190;
    a.texture = 30;
    s.agents.push_back(a);
  }
  return s;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.network.generator.noise_dim = 16;
  c.network.generator.base_channels = 8;
  c.network.generator.stages = {{8, 3, 2}, {8, 3, 2}, {4, 3, 2}, {3, 3, 2}};
  c.network.discriminator.extractor.blocks = {{4}, {8}, {8}};
  c.network.discriminator.hidden = 8;
  c.train.iterations = 20;
  c.train.batch_size = 8;
  return c;
}

ReferenceNetwork reference_network() {
  ReferenceNetwork r;
  r.generator.noise_dim = 6;
  r.generator.base_size = 1;
  r.generator.base_channels = 4;
  r.generator.stages = {{4, 3, 2}, {3, 3, 2}, {3, 3, 2}, {3, 3, 2}};
  r.discriminator.extractor.blocks = {{3}, {4}};
  r.discriminator.hidden = 6;
  return r;
}

std::vector<Patch> random_patches(std::size_t count, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<Patch> out(count);
  for (auto& p : out) {
    p.size = size;
    p.t = 4;
    p.data.resize(static_cast<std::size_t>(3 * size * size));
    for (auto& v : p.data) v = u(rng);
  }
  return out;
}

}  // namespace aed::testing
