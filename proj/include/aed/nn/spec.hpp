#pragma once

#include <string>
#include <vector>

namespace aed::nn {

struct ConvStage {
  int channels = 0;
  int kernel = 3;
  int upsample = 2;
};

/// Dense projection of the noise to a base grid, then exactly four
/// (upsample, conv, leaky) stages; the last stage uses a sigmoid instead.
struct GeneratorSpec {
  int noise_dim = 64;
  int base_size = 2;
  int base_channels = 256;
  std::vector<ConvStage> stages{{128, 3, 2}, {64, 3, 2}, {32, 3, 2}, {3, 3, 2}};
  double leaky_slope = 0.2;

  [[nodiscard]] int output_size() const;
  [[nodiscard]] int output_channels() const { return stages.empty() ? 0 : stages.back().channels; }
  void validate(int patch_size) const;
};

/// Frozen convolutional front end: blocks of ReLU convolutions, each followed by 2x2 max pooling.
struct ExtractorSpec {
  int input_size = 0;  // 0 = use the patch size; otherwise patches are resized bilinearly
  int in_channels = 3;
  int kernel = 3;
  std::vector<std::vector<int>> blocks;  // output channels of each conv, per block

  [[nodiscard]] int resolved_input(int patch_size) const { return input_size > 0 ? input_size : patch_size; }
  [[nodiscard]] std::size_t parameter_count() const;
  /// Flattened feature length for a given input edge length.
  [[nodiscard]] std::size_t feature_size(int input_edge) const;
  static std::string weight_name(int block, int conv);  // 1-based, e.g. "block2_conv1.weight"
  static std::string bias_name(int block, int conv);
};

/// VGG16 convolution blocks 1..depth (depth 4 ends at the fourth pooling layer).
ExtractorSpec vgg16_extractor(int depth = 4);

struct DiscriminatorSpec {
  ExtractorSpec extractor = vgg16_extractor(4);
  int hidden = 256;  // width of the first fully-connected layer
  double leaky_slope = 0.2;

  void validate(int patch_size) const;
};

}  // namespace aed::nn
