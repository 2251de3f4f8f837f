#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aed/advnet.hpp"
#include "aed/ingest.hpp"
#include "aed/motion.hpp"
#include "aed/optflow.hpp"

namespace aed {

struct DataConfig {
  std::string train;
  std::string test;
  std::string ground_truth;  // defaults to `test`
  Layout layout = Layout::ucsd;
};

struct PatchConfig {
  int patch_size = 32;
  int train_stride = 32;
  int test_stride = 16;
  double rho_min = 0.05;

  [[nodiscard]] GridSpec train_grid() const { return {patch_size, train_stride}; }
  [[nodiscard]] GridSpec test_grid() const { return {patch_size, test_stride}; }
};

struct NetworkConfig {
  GeneratorSpec generator;
  DiscriminatorSpec discriminator;
  std::string extractor_weights;  // optional named-tensor archive
};

struct FusionConfig {
  double alpha = 0.5;
  double overlay_threshold = 0.5;
};

struct SynthConfig {
  std::vector<SceneSpec> train;
  std::vector<SceneSpec> test;
};

/// Every tunable of the pipeline. Missing keys keep these defaults; unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string output = "aed-out";
  DataConfig data;
  int tau_fg = 25;  // intensity levels out of 255
  PatchConfig patches;
  FarnebackParams optflow;
  MotionParams motion;
  NetworkConfig network;
  TrainConfig train;
  FusionConfig fusion;
  SynthConfig synth;

  /// Checks every module invariant; throws Error(Errc::config).
  void validate() const;
  /// Training settings with the global seed applied.
  [[nodiscard]] TrainConfig train_config() const;
};

PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const PipelineConfig& config);

SceneSpec parse_scene(const std::string& json_text);
std::string serialize_scene(const SceneSpec& scene);

}  // namespace aed
