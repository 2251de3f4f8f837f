#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aed/config.hpp"
#include "aed/eval.hpp"

namespace aed {

/// Everything `detect` needs: the configuration it was trained with, the learned background,
/// the motion histogram model and both networks.
struct Model {
  PipelineConfig config;
  Gray8 background;
  MotionModel motion;
  NetworkParams generator;
  NetworkParams discriminator;
  std::vector<LossRecord> trace;
};

/// Log sink for long-running stages. Empty means silent.
using Log = std::function<void(const std::string&)>;

/// Loads every clip under `root`.
std::vector<FrameSequence> load_clips(const std::filesystem::path& root, Layout layout);

/// Training patches (train grid, frames t >= 4) of all clips against one background.
std::vector<Patch> training_patches(const std::vector<FrameSequence>& clips, const Gray8& background,
                                    const PipelineConfig& config, int jobs = 1);

/// Motion histogram and tail sets over consecutive-frame flow of all clips. `background` is
/// only used when the motion parameters restrict counting to foreground pixels.
MotionModel fit_motion(const std::vector<FrameSequence>& clips, const Gray8& background, const PipelineConfig& config,
                       int jobs = 1);

Model train_model(const std::vector<FrameSequence>& clips, const PipelineConfig& config, const Log& log = {});

/// Model directory: manifest.json, background.png, motion.json, network.aedt, loss.csv.
void save_model(const std::filesystem::path& dir, const Model& model);
Model load_model(const std::filesystem::path& dir);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& trace);

/// Per-frame debug products, kept only on request.
struct Intermediates {
  std::vector<Gray8> equalized;
  std::vector<ForegroundMask> foreground;
  std::vector<EdgeImage> edges;
  std::vector<FlowPolar> flow;  // empty entry for frame 0
  std::vector<MotionMask> motion;
};

struct ClipResult {
  std::string id;
  std::vector<FrameResult> frames;
  std::optional<Intermediates> intermediates;
};

struct DetectOptions {
  int jobs = 1;
  bool keep_intermediates = false;
};

/// Scores every frame of a clip. Frames before t = 4 have no appearance evidence and frame 0
/// has no motion evidence; their maps carry whatever evidence exists. Output does not depend on `jobs`.
ClipResult detect_clip(const FrameSequence& clip, const Model& model, const PipelineConfig& config,
                       const DetectOptions& options = {});

/// Rejects a detection config whose network, patch or motion settings differ from the model's.
void check_compatible(const PipelineConfig& config, const Model& model);

/// Results directory: scores.csv, timing.csv, maps/<clip>.aedt and optionally overlays/ and intermediates/.
void write_results(const std::filesystem::path& dir, const std::vector<ClipResult>& results,
                   const std::vector<FrameSequence>& clips, double overlay_threshold, bool overlays);

/// Frame scores, pixel maps and timings read back from a results directory.
std::vector<ClipResult> read_results(const std::filesystem::path& dir, bool with_maps);

enum class EvalMode { frame, pixel, both };

EvalMode parse_eval_mode(const std::string& name);

/// Ground truth per clip id: `<gt_root>/<clip>_gt` mask directories, otherwise a `.m` frame-range
/// file in `gt_root` indexed by the trailing number of the clip id.
GroundTruth find_ground_truth(const std::filesystem::path& gt_root, const ClipResult& clip, Size geometry);

/// Writes frame_roc.csv / pixel_roc.csv, frame_scores.csv and report.txt into `out_dir`.
Summary run_eval(const std::filesystem::path& results_dir, const std::filesystem::path& gt_root, EvalMode mode,
                 const std::filesystem::path& out_dir);

/// Metrics from report.txt (if present) followed by a per-stage timing table.
std::string run_report(const std::filesystem::path& results_dir);

/// Writes Train/TrainNNN, Test/TestNNN and Test/TestNNN_gt from the synthetic scene lists.
void run_synth(const std::filesystem::path& out_dir, const PipelineConfig& config);

/// Scene seed after applying the global seed.
std::uint64_t effective_seed(std::uint64_t scene_seed, std::uint64_t global_seed);

}  // namespace aed
