#include "aed/advnet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace aed {
namespace nn {

int GeneratorSpec::output_size() const {
  int s = base_size;
  for (const auto& st : stages) s *= st.upsample;
  return s;
}

void GeneratorSpec::validate(int patch_size) const {
  if (stages.size() != 4) throw Error(Errc::config, "generator must have exactly 4 convolutional stages");
  if (noise_dim < 1 || base_size < 1 || base_channels < 1) throw Error(Errc::config, "generator sizes must be >= 1");
  for (const auto& st : stages) {
    if (st.channels < 1 || st.kernel < 1 || st.kernel % 2 == 0 || st.upsample < 1) {
      throw Error(Errc::config, "generator stages need channels >= 1, an odd kernel and upsample >= 1");
    }
  }
  if (output_channels() != 3) throw Error(Errc::config, "generator must output 3 channels");
  if (output_size() != patch_size) {
    throw Error(Errc::config, "generator output " + std::to_string(output_size()) + " does not match patch size " +
                                  std::to_string(patch_size));
  }
}

std::size_t ExtractorSpec::parameter_count() const {
  std::size_t n = 0;
  int in = in_channels;
  for (const auto& block : blocks) {
    for (int out : block) {
      n += static_cast<std::size_t>(out) * in * kernel * kernel + out;
      in = out;
    }
  }
  return n;
}

std::size_t ExtractorSpec::feature_size(int input_edge) const {
  int edge = input_edge;
  int channels = in_channels;
  for (const auto& block : blocks) {
    if (!block.empty()) channels = block.back();
    edge /= 2;
  }
  return static_cast<std::size_t>(channels) * edge * edge;
}

std::string ExtractorSpec::weight_name(int block, int conv) {
  return "block" + std::to_string(block) + "_conv" + std::to_string(conv) + ".weight";
}

std::string ExtractorSpec::bias_name(int block, int conv) {
  return "block" + std::to_string(block) + "_conv" + std::to_string(conv) + ".bias";
}

ExtractorSpec vgg16_extractor(int depth) {
  static const std::vector<std::vector<int>> vgg{{64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}};
  if (depth < 0 || depth > 5) throw Error(Errc::config, "VGG16 has 5 convolution blocks");
  ExtractorSpec spec;
  spec.blocks.assign(vgg.begin(), vgg.begin() + depth);
  return spec;
}

void DiscriminatorSpec::validate(int patch_size) const {
  if (hidden < 1) throw Error(Errc::config, "head hidden width must be >= 1");
  if (extractor.kernel < 1 || extractor.kernel % 2 == 0) throw Error(Errc::config, "extractor kernel must be odd");
  for (const auto& block : extractor.blocks) {
    if (block.empty()) throw Error(Errc::config, "extractor blocks must hold at least one convolution");
    for (int c : block) {
      if (c < 1) throw Error(Errc::config, "extractor channels must be >= 1");
    }
  }
  if (extractor.feature_size(extractor.resolved_input(patch_size)) == 0) {
    throw Error(Errc::config, "extractor input is too small for its pooling depth");
  }
}

}  // namespace nn

namespace {

constexpr double kAdamEps = 1e-8;

std::uint64_t splitmix_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void fill_normal(Tensor& t, NormalSampler& rng, double stddev) {
  for (auto& v : t.values) v = static_cast<float>(rng() * stddev);
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> extractor_shapes(const ExtractorSpec& spec) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  std::size_t in = static_cast<std::size_t>(spec.in_channels);
  const auto k = static_cast<std::size_t>(spec.kernel);
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    for (std::size_t c = 0; c < spec.blocks[b].size(); ++c) {
      const auto o = static_cast<std::size_t>(spec.blocks[b][c]);
      const int bi = static_cast<int>(b) + 1, ci = static_cast<int>(c) + 1;
      out.push_back({ExtractorSpec::weight_name(bi, ci), {o, in, k, k}});
      out.push_back({ExtractorSpec::bias_name(bi, ci), {o}});
      in = o;
    }
  }
  return out;
}

struct AdamState {
  std::map<std::string, std::vector<float>> m, v;
  long step = 0;
};

void apply_update(NetworkParams& params, const NetworkParams& grads, AdamState& state, const TrainConfig& cfg) {
  ++state.step;
  const double lr = cfg.learning_rate;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads.tensors) {
    if (params.is_frozen(name)) continue;
    auto& p = params.at(name).values;
    if (cfg.optimizer == Optimizer::sgd) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= static_cast<float>(lr * g.values[i]);
      continue;
    }
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(p.size(), 0.f);
      v.assign(p.size(), 0.f);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.values[i];
      m[i] = static_cast<float>(cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi);
      v[i] = static_cast<float>(cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi);
      const double step = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
      p[i] = static_cast<float>(p[i] - step);
    }
  }
}

void zero(NetworkParams& grads) {
  for (auto& [name, t] : grads.tensors) std::fill(t.values.begin(), t.values.end(), 0.f);
}

void check_patches(std::span<const Patch> patches, int patch_size) {
  for (const auto& p : patches) {
    if (p.size != patch_size || p.data.size() != static_cast<std::size_t>(3 * patch_size * patch_size)) {
      throw Error(Errc::shape_mismatch, "patch of size " + std::to_string(p.size) + " does not match the network (" +
                                            std::to_string(patch_size) + ")");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw Error(Errc::config, "iterations must be >= 1");
  if (batch_size < 1) throw Error(Errc::config, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw Error(Errc::config, "learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw Error(Errc::config, "Adam betas must be in [0,1)");
}

NormalSampler::NormalSampler(std::uint64_t seed) : state_(seed) {}

std::uint64_t NormalSampler::next_u64() { return splitmix_next(state_); }

double NormalSampler::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  } while (u1 <= 0.0);
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

NetworkParams init_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  NormalSampler rng(seed ^ 0x47454E00ULL);
  NetworkParams p;
  const auto proj = static_cast<std::size_t>(spec.base_channels) * spec.base_size * spec.base_size;
  Tensor w({proj, static_cast<std::size_t>(spec.noise_dim)});
  fill_normal(w, rng, std::sqrt(1.0 / spec.noise_dim));
  p.tensors.emplace(nn::kGenProjWeight, std::move(w));
  p.tensors.emplace(nn::kGenProjBias, Tensor({proj}));
  auto in = static_cast<std::size_t>(spec.base_channels);
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& st = spec.stages[i];
    const auto k = static_cast<std::size_t>(st.kernel);
    const auto out = static_cast<std::size_t>(st.channels);
    Tensor cw({out, in, k, k});
    fill_normal(cw, rng, std::sqrt(2.0 / static_cast<double>(in * k * k)));
    const int idx = static_cast<int>(i) + 1;
    p.tensors.emplace(nn::gen_name(idx, "weight"), std::move(cw));
    p.tensors.emplace(nn::gen_name(idx, "bias"), Tensor({out}));
    in = out;
  }
  return p;
}

NetworkParams init_discriminator(const DiscriminatorSpec& spec, int patch_size, std::uint64_t seed,
                                 const NetworkParams* extractor) {
  spec.validate(patch_size);
  NormalSampler rng(seed ^ 0x44495300ULL);
  NetworkParams p;
  for (const auto& [name, shape] : extractor_shapes(spec.extractor)) {
    Tensor t(shape);
    if (shape.size() == 4) fill_normal(t, rng, std::sqrt(2.0 / static_cast<double>(shape[1] * shape[2] * shape[3])));
    p.tensors.emplace(name, std::move(t));
    p.frozen.insert(name);
  }
  if (extractor != nullptr) {
    for (const auto& [name, shape] : extractor_shapes(spec.extractor)) {
      const auto& src = extractor->at(name);
      if (src.shape != shape) throw Error(Errc::shape_mismatch, "extractor tensor '" + name + "' has the wrong shape");
      p.at(name) = src;
    }
  }
  const auto features = spec.extractor.feature_size(spec.extractor.resolved_input(patch_size));
  const auto hidden = static_cast<std::size_t>(spec.hidden);
  Tensor w1({hidden, features});
  fill_normal(w1, rng, std::sqrt(2.0 / static_cast<double>(features)));
  Tensor w2({1, hidden});
  fill_normal(w2, rng, std::sqrt(1.0 / static_cast<double>(hidden)));
  p.tensors.emplace(nn::kHeadFc1Weight, std::move(w1));
  p.tensors.emplace(nn::kHeadFc1Bias, Tensor({hidden}));
  p.tensors.emplace(nn::kHeadFc2Weight, std::move(w2));
  p.tensors.emplace(nn::kHeadFc2Bias, Tensor({1}));
  return p;
}

NetworkParams extractor_from_archive(const TensorArchive& archive, const ExtractorSpec& spec) {
  NetworkParams p;
  for (const auto& [name, shape] : extractor_shapes(spec)) {
    const auto* t = archive.find(name);
    if (t == nullptr) throw Error(Errc::missing_name, "extractor archive lacks '" + name + "'");
    if (t->shape != shape) {
      std::string want, got;
      for (auto d : shape) want += std::to_string(d) + " ";
      for (auto d : t->shape) got += std::to_string(d) + " ";
      throw Error(Errc::shape_mismatch, "extractor tensor '" + name + "' has shape [ " + got + "], expected [ " + want + "]");
    }
    p.tensors.emplace(name, *t);
    p.frozen.insert(name);
  }
  return p;
}

NetworkParams extractor_load(const std::filesystem::path& archive, const ExtractorSpec& spec) {
  return extractor_from_archive(TensorArchive::load(archive), spec);
}

std::vector<float> generator_forward(const GeneratorSpec& spec, const NetworkParams& params, std::span<const float> z) {
  return nn::generator_forward<float>(spec, params, z);
}

double discriminator_forward(const DiscriminatorSpec& spec, const NetworkParams& params, std::span<const float> patch,
                             int patch_size) {
  if (patch.size() != static_cast<std::size_t>(spec.extractor.in_channels * patch_size * patch_size)) {
    throw Error(Errc::shape_mismatch, "patch length does not match the discriminator input");
  }
  const float logit = nn::discriminator_logit<float>(spec, params, patch, patch_size);
  return nn::sigmoid<double>(logit);
}

std::vector<double> score_patches(std::span<const Patch> patches, const DiscriminatorSpec& spec,
                                  const NetworkParams& params) {
  std::vector<double> scores;
  scores.reserve(patches.size());
  for (const auto& p : patches) {
    scores.push_back(discriminator_forward(spec, params, std::span<const float>(p.data), p.size));
  }
  return scores;
}

TrainResult train(std::span<const Patch> patches, const GeneratorSpec& gspec, const DiscriminatorSpec& dspec,
                  const TrainConfig& cfg, NetworkParams generator, NetworkParams discriminator,
                  const TrainProgress& progress) {
  cfg.validate();
  if (patches.empty()) throw Error(Errc::empty_input, "no training patches");
  if (patches.size() < static_cast<std::size_t>(cfg.batch_size)) {
    throw Error(Errc::empty_input, std::to_string(patches.size()) + " training patches for a batch of " +
                                       std::to_string(cfg.batch_size));
  }
  const int patch_size = gspec.output_size();
  gspec.validate(patch_size);
  dspec.validate(patch_size);
  check_patches(patches, patch_size);

  TrainResult result{std::move(generator), std::move(discriminator), {}};
  auto& G = result.generator;
  auto& D = result.discriminator;
  NetworkParams g_grads = G.zeros_like_trainable();
  NetworkParams d_grads = D.zeros_like_trainable();
  AdamState g_state, d_state;
  NormalSampler rng(cfg.seed);

  const auto B = static_cast<std::size_t>(cfg.batch_size);
  const nn::Shape3 in_shape{3, patch_size, patch_size};
  const float inv_b = 1.0f / static_cast<float>(B);
  std::vector<std::vector<float>> noise(B, std::vector<float>(static_cast<std::size_t>(gspec.noise_dim)));
  std::vector<nn::GeneratorCache<float>> g_cache(B);
  std::vector<nn::ExtractorCache<float>> x_cache(B);
  std::vector<std::vector<float>> fake_features(B);
  result.trace.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int it = 0; it < cfg.iterations; ++it) {
    // Discriminator step: real -> 1, generated -> 0.
    zero(d_grads);
    double d_loss = 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < B; ++i) {
      const auto& real = patches[rng.index(patches.size())];
      const auto features = nn::extractor_forward<float>(dspec.extractor, D, real.data, in_shape);
      nn::HeadCache<float> hc;
      const float logit = nn::head_forward<float>(dspec, D, features, &hc);
      const float s = nn::sigmoid(logit);
      d_loss += nn::softplus<double>(-logit) / static_cast<double>(B);
      correct += s > 0.5f;
      nn::head_backward<float>(dspec, D, hc, (s - 1.0f) * inv_b, &d_grads, false);
    }
    for (std::size_t j = 0; j < B; ++j) {
      for (auto& v : noise[j]) v = static_cast<float>(rng());
      const auto fake = nn::generator_forward<float>(gspec, G, noise[j], &g_cache[j]);
      fake_features[j] = nn::extractor_forward<float>(dspec.extractor, D, fake, in_shape, &x_cache[j]);
      nn::HeadCache<float> hc;
      const float logit = nn::head_forward<float>(dspec, D, fake_features[j], &hc);
      const float s = nn::sigmoid(logit);
      d_loss += nn::softplus<double>(logit) / static_cast<double>(B);
      correct += s < 0.5f;
      nn::head_backward<float>(dspec, D, hc, s * inv_b, &d_grads, false);
    }
    apply_update(D, d_grads, d_state, cfg);

    // Generator step on the same samples against the updated head.
    zero(g_grads);
    double g_loss = 0.0;
    for (std::size_t j = 0; j < B; ++j) {
      nn::HeadCache<float> hc;
      const float logit = nn::head_forward<float>(dspec, D, fake_features[j], &hc);
      g_loss += nn::softplus<double>(-logit) / static_cast<double>(B);
      const float dlogit = (nn::sigmoid(logit) - 1.0f) * inv_b;
      const auto g_feat = nn::head_backward<float>(dspec, D, hc, dlogit, nullptr, true);
      const auto g_patch = nn::extractor_backward<float>(dspec.extractor, D, x_cache[j], g_feat, nullptr, true);
      nn::generator_backward<float>(gspec, G, g_cache[j], g_patch, g_grads);
    }
    apply_update(G, g_grads, g_state, cfg);

    if (!std::isfinite(d_loss) || !std::isfinite(g_loss)) {
      throw Error(Errc::non_finite, "non-finite loss at iteration " + std::to_string(it + 1) +
                                        " (d_loss=" + std::to_string(d_loss) + ", g_loss=" + std::to_string(g_loss) + ")");
    }
    LossRecord rec{it + 1, d_loss, g_loss, static_cast<double>(correct) / static_cast<double>(2 * B)};
    result.trace.push_back(rec);
    if (progress) progress(rec);
  }
  return result;
}

TrainResult train(std::span<const Patch> patches, const GeneratorSpec& gspec, const DiscriminatorSpec& dspec,
                  const TrainConfig& cfg, const NetworkParams* pretrained_extractor, const TrainProgress& progress) {
  const int patch_size = gspec.output_size();
  gspec.validate(patch_size);
  return train(patches, gspec, dspec, cfg, init_generator(gspec, cfg.seed),
               init_discriminator(dspec, patch_size, cfg.seed, pretrained_extractor), progress);
}

GradCheckResult grad_check(const GeneratorSpec& gspec, const NetworkParams& generator, const DiscriminatorSpec& dspec,
                           const NetworkParams& discriminator, std::span<const Patch> batch, double epsilon,
                           std::size_t samples_per_tensor, std::uint64_t seed) {
  if (batch.empty()) throw Error(Errc::empty_input, "gradient check needs a non-empty batch");
  const int patch_size = batch.front().size;
  check_patches(batch, patch_size);

  auto G = nn::cast_params<double>(generator);
  auto D = nn::cast_params<double>(discriminator);
  NormalSampler rng(seed);

  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  for (const auto& p : batch) {
    inputs.emplace_back(p.data.begin(), p.data.end());
    labels.push_back(1);
  }
  const bool with_generator = !G.tensors.empty();
  std::vector<std::vector<double>> noise;
  if (with_generator) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::vector<double> z(static_cast<std::size_t>(gspec.noise_dim));
      for (auto& v : z) v = rng();
      inputs.push_back(nn::generator_forward<double>(gspec, G, z));
      labels.push_back(0);
      noise.push_back(std::move(z));
    }
  }

  GradCheckResult result;
  auto compare = [&](nn::BasicParams<double>& params, const nn::BasicParams<double>& analytic, auto&& loss_fn) {
    for (const auto& [name, grad] : analytic.tensors) {
      auto& values = params.at(name).values;
      std::vector<std::size_t> coords;
      if (values.size() <= samples_per_tensor) {
        for (std::size_t i = 0; i < values.size(); ++i) coords.push_back(i);
      } else {
        for (std::size_t s = 0; s < samples_per_tensor; ++s) coords.push_back(rng.index(values.size()));
      }
      for (auto c : coords) {
        const double saved = values[c];
        values[c] = saved + epsilon;
        const double up = loss_fn();
        values[c] = saved - epsilon;
        const double down = loss_fn();
        values[c] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = grad.values[c];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        result.max_relative_error = std::max(result.max_relative_error, rel);
        ++result.coordinates;
      }
    }
  };

  auto d_grads = D.zeros_like_trainable();
  nn::discriminator_loss<double>(dspec, D, inputs, labels, patch_size, &d_grads);
  compare(D, d_grads, [&] { return nn::discriminator_loss<double>(dspec, D, inputs, labels, patch_size, nullptr); });

  if (with_generator) {
    auto g_grads = G.zeros_like_trainable();
    nn::generator_loss<double>(gspec, G, dspec, D, noise, &g_grads);
    compare(G, g_grads, [&] { return nn::generator_loss<double>(gspec, G, dspec, D, noise, nullptr); });
  }
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& generator,
                     const NetworkParams& discriminator) {
  TensorArchive archive;
  for (const auto& [name, t] : generator.tensors) archive.entries.emplace_back(name, t);
  for (const auto& [name, t] : discriminator.tensors) archive.entries.emplace_back(name, t);
  archive.save(path);
}

std::pair<NetworkParams, NetworkParams> load_checkpoint(const std::filesystem::path& path, const GeneratorSpec& gspec,
                                                        const DiscriminatorSpec& dspec, int patch_size) {
  const auto archive = TensorArchive::load(path);
  auto G = init_generator(gspec, 0);
  auto D = init_discriminator(dspec, patch_size, 0);
  for (auto* params : {&G, &D}) {
    for (auto& [name, t] : params->tensors) {
      const auto* src = archive.find(name);
      if (src == nullptr) throw Error(Errc::missing_name, "checkpoint lacks '" + name + "'");
      if (src->shape != t.shape) throw Error(Errc::shape_mismatch, "checkpoint tensor '" + name + "' has the wrong shape");
      t = *src;
    }
  }
  return {std::move(G), std::move(D)};
}

}  // namespace aed
