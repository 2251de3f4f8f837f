#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aed/archive.hpp"
#include "aed/nn/model.hpp"
#include "aed/patches.hpp"

namespace aed {

using nn::DiscriminatorSpec;
using nn::ExtractorSpec;
using nn::GeneratorSpec;
using nn::NetworkParams;
using nn::Tensor;

enum class Optimizer { adam, sgd };

struct TrainConfig {
  int iterations = 16000;
  int batch_size = 64;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;

  void validate() const;
};

struct LossRecord {
  int iteration = 0;
  double d_loss = 0.0;      // BCE(real -> 1) + BCE(fake -> 0), batch means
  double g_loss = 0.0;      // mean -log D(G(z)) after the discriminator update
  double d_accuracy = 0.0;  // fraction of real scored > 0.5 and fake scored < 0.5
};

struct TrainResult {
  NetworkParams generator;
  NetworkParams discriminator;
  std::vector<LossRecord> trace;
};

/// Standard-normal sampler with a platform-independent sequence for a given seed.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed);
  double operator()();
  std::uint64_t next_u64();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

NetworkParams init_generator(const GeneratorSpec& spec, std::uint64_t seed);

/// Random (He) initialization of the extractor and head. Extractor parameters are frozen.
/// When `extractor` is given its tensors replace the random extractor.
NetworkParams init_discriminator(const DiscriminatorSpec& spec, int patch_size, std::uint64_t seed,
                                 const NetworkParams* extractor = nullptr);

/// Extractor tensors from a named-tensor archive, checked against the descriptor and frozen.
NetworkParams extractor_from_archive(const TensorArchive& archive, const ExtractorSpec& spec);
NetworkParams extractor_load(const std::filesystem::path& archive, const ExtractorSpec& spec);

std::vector<float> generator_forward(const GeneratorSpec& spec, const NetworkParams& params, std::span<const float> z);

/// Normality score in (0,1); higher means more likely a real normal patch.
double discriminator_forward(const DiscriminatorSpec& spec, const NetworkParams& params, std::span<const float> patch,
                             int patch_size);

/// One normality score per patch, in input order. Abnormality is 1 - score.
std::vector<double> score_patches(std::span<const Patch> patches, const DiscriminatorSpec& spec,
                                  const NetworkParams& params);

using TrainProgress = std::function<void(const LossRecord&)>;

/// Adversarial training from given initial parameters. Frozen discriminator tensors are never modified.
TrainResult train(std::span<const Patch> patches, const GeneratorSpec& gspec, const DiscriminatorSpec& dspec,
                  const TrainConfig& cfg, NetworkParams generator, NetworkParams discriminator,
                  const TrainProgress& progress = {});

/// Adversarial training from a seeded initialization (optionally with pretrained extractor tensors).
TrainResult train(std::span<const Patch> patches, const GeneratorSpec& gspec, const DiscriminatorSpec& dspec,
                  const TrainConfig& cfg, const NetworkParams* pretrained_extractor = nullptr,
                  const TrainProgress& progress = {});

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares analytic gradients with central differences in double precision, over sampled
/// coordinates of every non-frozen tensor: the discriminator loss on `batch` (real) plus
/// generated samples (fake), and the generator loss. An empty generator skips the fake terms.
GradCheckResult grad_check(const GeneratorSpec& gspec, const NetworkParams& generator, const DiscriminatorSpec& dspec,
                           const NetworkParams& discriminator, std::span<const Patch> batch, double epsilon,
                           std::size_t samples_per_tensor = 16, std::uint64_t seed = 0);

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& generator,
                     const NetworkParams& discriminator);

/// Splits a checkpoint into generator and discriminator parameters and validates shapes against `gspec` and `dspec`.
std::pair<NetworkParams, NetworkParams> load_checkpoint(const std::filesystem::path& path, const GeneratorSpec& gspec,
                                                        const DiscriminatorSpec& dspec, int patch_size);

}  // namespace aed
