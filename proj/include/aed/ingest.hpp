#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aed/image.hpp"

namespace aed {

/// Ordered grayscale frames of one clip. All frames share one geometry.
struct FrameSequence {
  std::string id;
  std::vector<Gray8> frames;

  [[nodiscard]] Size size() const { return frames.empty() ? Size{} : frames.front().size(); }
  [[nodiscard]] std::size_t length() const { return frames.size(); }
};

/// Per-frame abnormality flags with optional per-frame pixel masks.
struct GroundTruth {
  std::vector<std::uint8_t> frame_flags;
  std::optional<std::vector<Mask>> pixel_masks;

  [[nodiscard]] std::size_t length() const { return frame_flags.size(); }
  [[nodiscard]] bool has_masks() const { return pixel_masks.has_value(); }
};

enum class Layout { ucsd, generic };

Layout parse_layout(const std::string& name);

/// Loads one clip directory of numbered frames.
/// Frames are ordered by the integer value of the last digit run in the file stem.
FrameSequence load_sequence(const std::filesystem::path& dir, Layout layout = Layout::generic);

/// Loads a directory of binary masks (thresholded at 128) and derives the frame flags from them.
GroundTruth load_ground_truth(const std::filesystem::path& dir, Size geometry,
                              std::optional<std::size_t> expected_frames = std::nullopt);

/// Clip directories under `root`: `root` itself when it holds frames, otherwise every
/// subdirectory holding frames except mask directories (suffix `_gt`), sorted by name.
std::vector<std::filesystem::path> discover_clips(const std::filesystem::path& root, Layout layout = Layout::generic);

/// Sibling mask directory of a clip (`Test001` -> `Test001_gt`), if it exists.
std::optional<std::filesystem::path> mask_dir_for(const std::filesystem::path& clip_dir);

/// Frame-range annotations from a UCSD `.m` file: 1-based clip index -> inclusive 1-based frame ranges.
std::map<int, std::vector<std::pair<int, int>>> parse_ucsd_annotations(const std::filesystem::path& m_file);

GroundTruth ground_truth_from_ranges(std::size_t frame_count, const std::vector<std::pair<int, int>>& one_based_ranges);

void write_sequence(const std::filesystem::path& dir, const FrameSequence& seq);
void write_masks(const std::filesystem::path& dir, const GroundTruth& gt);

// ---------------------------------------------------------------------------
// Synthetic scenes

enum class AgentShape { rect, disk };

struct BackgroundSpec {
  enum class Kind { constant, noise, gradient };
  Kind kind = Kind::constant;
  int level = 100;
  /// Noise amplitude, or half the ramp span for gradients.
  int amplitude = 0;
  /// Noise pattern key. Scenes sharing it share one static background (one fixed camera).
  std::uint64_t seed = 0;
};

struct AgentSpec {
  AgentShape shape = AgentShape::rect;
  int width = 8;   // disk diameter for disks
  int height = 16;
  double speed = 1.0;      // px/frame
  double direction = 0.0;  // radians, image axes (y down)
  double x = 0.0;          // start center
  double y = 0.0;
  int intensity = 200;
  int texture = 0;  // amplitude of rigid per-agent texture
  bool visible = true;
};

/// Replaces some agent attributes on the inclusive frame range [first_frame, last_frame].
/// Pixels rendered by the agent while an override is active are ground-truth abnormal.
struct AnomalySpec {
  std::size_t agent = 0;
  int first_frame = 0;
  int last_frame = 0;
  std::optional<double> speed;
  std::optional<double> direction;
  std::optional<int> intensity;
  std::optional<bool> visible;

  [[nodiscard]] bool active(int t) const { return t >= first_frame && t <= last_frame; }
};

struct SceneSpec {
  std::string id = "scene";
  int width = 160;
  int height = 120;
  BackgroundSpec background;
  std::vector<AgentSpec> agents;
  std::vector<AnomalySpec> anomalies;
  int num_frames = 0;
  std::uint64_t seed = 0;
};

struct SyntheticClip {
  FrameSequence sequence;
  GroundTruth truth;
};

void validate(const SceneSpec& spec);

/// Renders the scene. Agents wrap around the frame and are painted in list order.
SyntheticClip synthesize(const SceneSpec& spec);

/// The static background alone.
Gray8 render_background(const SceneSpec& spec);

}  // namespace aed
