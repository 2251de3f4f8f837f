#pragma once

// Forward and backward passes of the generator and discriminator, templated on the scalar
// so that training runs in float while gradient checks run in double.

#include <span>
#include <string>
#include <vector>

#include "aed/nn/ops.hpp"
#include "aed/nn/spec.hpp"
#include "aed/nn/tensor.hpp"

namespace aed::nn {

inline std::string gen_name(int stage, const char* kind) {
  return "gen_conv" + std::to_string(stage) + "." + kind;
}
inline const std::string kGenProjWeight = "gen_proj.weight";
inline const std::string kGenProjBias = "gen_proj.bias";
inline const std::string kHeadFc1Weight = "head_fc1.weight";
inline const std::string kHeadFc1Bias = "head_fc1.bias";
inline const std::string kHeadFc2Weight = "head_fc2.weight";
inline const std::string kHeadFc2Bias = "head_fc2.bias";

template <class T>
std::span<const T> cspan(const std::vector<T>& v) {
  return {v.data(), v.size()};
}

template <class T>
std::span<T> grad_span(BasicParams<T>* grads, const std::string& name) {
  if (grads == nullptr || !grads->contains(name)) return {};
  auto& v = grads->at(name).values;
  return {v.data(), v.size()};
}

// ---------------------------------------------------------------------------
// Generator

template <class T>
struct GeneratorCache {
  std::vector<T> z;
  std::vector<std::vector<T>> conv_in;  // upsampled input of each stage
  std::vector<Shape3> conv_in_shape;
  std::vector<std::vector<T>> pre;  // conv output before the nonlinearity
  Shape3 base_shape;
  std::vector<T> out;
};

template <class T>
std::vector<T> generator_forward(const GeneratorSpec& spec, const BasicParams<T>& params, std::span<const T> z,
                                 GeneratorCache<T>* cache = nullptr) {
  if (z.size() != static_cast<std::size_t>(spec.noise_dim)) {
    throw Error(Errc::shape_mismatch, "noise vector has " + std::to_string(z.size()) + " entries, expected " +
                                          std::to_string(spec.noise_dim));
  }
  Shape3 shape{spec.base_channels, spec.base_size, spec.base_size};
  std::vector<T> x(shape.size());
  dense_forward<T>(z, cspan(params.at(kGenProjWeight).values), cspan(params.at(kGenProjBias).values), x);
  if (cache) {
    cache->z.assign(z.begin(), z.end());
    cache->base_shape = shape;
    cache->conv_in.clear();
    cache->conv_in_shape.clear();
    cache->pre.clear();
  }

  const T slope = static_cast<T>(spec.leaky_slope);
  std::vector<T> up;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& st = spec.stages[i];
    const Shape3 us = upsample_forward<T>(cspan(x), shape, st.upsample, up);
    std::vector<T> pre(static_cast<std::size_t>(st.channels) * us.plane());
    const int idx = static_cast<int>(i) + 1;
    conv2d_forward<T>(cspan(up), us, cspan(params.at(gen_name(idx, "weight")).values),
                      cspan(params.at(gen_name(idx, "bias")).values), st.channels, st.kernel, pre);
    shape = {st.channels, us.h, us.w};
    x.resize(pre.size());
    const bool last = i + 1 == spec.stages.size();
    for (std::size_t k = 0; k < pre.size(); ++k) {
      x[k] = last ? sigmoid(pre[k]) : (pre[k] > 0 ? pre[k] : slope * pre[k]);
    }
    if (cache) {
      cache->conv_in.push_back(up);
      cache->conv_in_shape.push_back(us);
      cache->pre.push_back(std::move(pre));
    }
  }
  if (cache) cache->out = x;
  return x;
}

/// Accumulates parameter gradients of the generator given dL/d(output).
template <class T>
void generator_backward(const GeneratorSpec& spec, const BasicParams<T>& params, const GeneratorCache<T>& cache,
                        std::span<const T> grad_out, BasicParams<T>& grads) {
  const T slope = static_cast<T>(spec.leaky_slope);
  std::vector<T> g(grad_out.begin(), grad_out.end());
  for (std::size_t i = spec.stages.size(); i-- > 0;) {
    const auto& st = spec.stages[i];
    const auto& pre = cache.pre[i];
    const bool last = i + 1 == spec.stages.size();
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (last) {
        const T s = cache.out[k];
        g[k] *= s * (1 - s);
      } else if (pre[k] <= 0) {
        g[k] *= slope;
      }
    }
    const int idx = static_cast<int>(i) + 1;
    const Shape3 us = cache.conv_in_shape[i];
    std::vector<T> g_up(us.size(), T(0));
    conv2d_backward<T>(cspan(cache.conv_in[i]), us, cspan(params.at(gen_name(idx, "weight")).values), st.channels,
                       st.kernel, cspan(g), g_up, grad_span(&grads, gen_name(idx, "weight")),
                       grad_span(&grads, gen_name(idx, "bias")));
    const Shape3 below{us.c, us.h / st.upsample, us.w / st.upsample};
    std::vector<T> g_below(below.size(), T(0));
    upsample_backward<T>(cspan(g_up), below, st.upsample, g_below);
    g = std::move(g_below);
  }
  dense_backward<T>(cspan(cache.z), cspan(params.at(kGenProjWeight).values), cspan(g), std::span<T>{},
                    grad_span(&grads, kGenProjWeight), grad_span(&grads, kGenProjBias));
}

// ---------------------------------------------------------------------------
// Extractor (conv blocks + pooling), optionally preceded by a bilinear resize

template <class T>
struct ExtractorCache {
  Shape3 input_shape;
  bool resized = false;
  std::vector<std::vector<T>> conv_in;
  std::vector<Shape3> conv_shape;
  std::vector<std::vector<T>> pre;
  std::vector<std::vector<int>> pool_argmax;
  std::vector<Shape3> pool_in_shape;
};

template <class T>
std::vector<T> extractor_forward(const ExtractorSpec& spec, const BasicParams<T>& params, std::span<const T> input,
                                 Shape3 input_shape, ExtractorCache<T>* cache = nullptr) {
  if (input_shape.c != spec.in_channels || input.size() != input_shape.size()) {
    throw Error(Errc::shape_mismatch, "extractor input has the wrong shape");
  }
  const int edge = spec.resolved_input(input_shape.h);
  std::vector<T> x;
  Shape3 shape = input_shape;
  if (edge != input_shape.h || edge != input_shape.w) {
    resize_forward<T>(input, input_shape, edge, edge, x);
    shape = {input_shape.c, edge, edge};
  } else {
    x.assign(input.begin(), input.end());
  }
  if (cache) {
    *cache = ExtractorCache<T>{};
    cache->input_shape = input_shape;
    cache->resized = !(shape == input_shape);
  }

  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    for (std::size_t c = 0; c < spec.blocks[b].size(); ++c) {
      const int out_c = spec.blocks[b][c];
      const int bi = static_cast<int>(b) + 1, ci = static_cast<int>(c) + 1;
      std::vector<T> pre(static_cast<std::size_t>(out_c) * shape.plane());
      conv2d_forward<T>(cspan(x), shape, cspan(params.at(ExtractorSpec::weight_name(bi, ci)).values),
                        cspan(params.at(ExtractorSpec::bias_name(bi, ci)).values), out_c, spec.kernel, pre);
      if (cache) {
        cache->conv_in.push_back(x);
        cache->conv_shape.push_back(shape);
      }
      x.resize(pre.size());
      for (std::size_t k = 0; k < pre.size(); ++k) x[k] = pre[k] > 0 ? pre[k] : T(0);
      if (cache) cache->pre.push_back(std::move(pre));
      shape.c = out_c;
    }
    std::vector<T> pooled;
    std::vector<int> argmax;
    const Shape3 out_shape = maxpool2_forward<T>(cspan(x), shape, pooled, cache ? &argmax : nullptr);
    if (cache) {
      cache->pool_argmax.push_back(std::move(argmax));
      cache->pool_in_shape.push_back(shape);
    }
    x = std::move(pooled);
    shape = out_shape;
  }
  return x;
}

/// Backpropagates dL/d(features). Returns dL/d(input) when requested; accumulates
/// weight gradients only for names present in `grads`.
template <class T>
std::vector<T> extractor_backward(const ExtractorSpec& spec, const BasicParams<T>& params,
                                  const ExtractorCache<T>& cache, std::span<const T> grad_features,
                                  BasicParams<T>* grads, bool want_input_grad) {
  std::vector<T> g(grad_features.begin(), grad_features.end());
  std::size_t conv_index = cache.conv_in.size();
  for (std::size_t b = spec.blocks.size(); b-- > 0;) {
    std::vector<T> g_pool(cache.pool_in_shape[b].size(), T(0));
    maxpool2_backward<T>(cspan(g), cache.pool_argmax[b], g_pool);
    g = std::move(g_pool);
    for (std::size_t c = spec.blocks[b].size(); c-- > 0;) {
      --conv_index;
      const auto& pre = cache.pre[conv_index];
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (pre[k] <= 0) g[k] = 0;
      }
      const int bi = static_cast<int>(b) + 1, ci = static_cast<int>(c) + 1;
      const Shape3 in_shape = cache.conv_shape[conv_index];
      const bool need_input = want_input_grad || conv_index > 0;
      std::vector<T> g_in(need_input ? in_shape.size() : 0, T(0));
      conv2d_backward<T>(cspan(cache.conv_in[conv_index]), in_shape,
                         cspan(params.at(ExtractorSpec::weight_name(bi, ci)).values), spec.blocks[b][c], spec.kernel,
                         cspan(g), g_in, grad_span(grads, ExtractorSpec::weight_name(bi, ci)),
                         grad_span(grads, ExtractorSpec::bias_name(bi, ci)));
      g = std::move(g_in);
    }
  }
  if (!want_input_grad) return {};
  if (cache.resized) {
    const int edge = cache.conv_shape.empty() ? spec.resolved_input(cache.input_shape.h)
                                              : cache.conv_shape.front().h;
    std::vector<T> g_in(cache.input_shape.size(), T(0));
    resize_backward<T>(cspan(g), cache.input_shape, edge, edge, g_in);
    return g_in;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Head: fc1 -> leaky -> fc2 -> logit (score = sigmoid(logit))

template <class T>
struct HeadCache {
  std::vector<T> features;
  std::vector<T> pre;
  std::vector<T> hidden;
};

template <class T>
T head_forward(const DiscriminatorSpec& spec, const BasicParams<T>& params, std::span<const T> features,
               HeadCache<T>* cache = nullptr) {
  const auto& w1 = params.at(kHeadFc1Weight);
  if (w1.shape.size() != 2 || w1.shape[1] != features.size()) {
    throw Error(Errc::shape_mismatch, "feature length " + std::to_string(features.size()) +
                                          " does not match the head input");
  }
  std::vector<T> pre(static_cast<std::size_t>(spec.hidden));
  dense_forward<T>(features, cspan(w1.values), cspan(params.at(kHeadFc1Bias).values), pre);
  std::vector<T> hidden(pre.size());
  const T slope = static_cast<T>(spec.leaky_slope);
  for (std::size_t k = 0; k < pre.size(); ++k) hidden[k] = pre[k] > 0 ? pre[k] : slope * pre[k];
  T logit{};
  dense_forward<T>(cspan(hidden), cspan(params.at(kHeadFc2Weight).values), cspan(params.at(kHeadFc2Bias).values),
                   std::span<T>(&logit, 1));
  if (cache) {
    cache->features.assign(features.begin(), features.end());
    cache->pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return logit;
}

template <class T>
std::vector<T> head_backward(const DiscriminatorSpec& spec, const BasicParams<T>& params, const HeadCache<T>& cache,
                             T grad_logit, BasicParams<T>* grads, bool want_feature_grad) {
  std::vector<T> g_hidden(cache.hidden.size(), T(0));
  dense_backward<T>(cspan(cache.hidden), cspan(params.at(kHeadFc2Weight).values), std::span<const T>(&grad_logit, 1),
                    g_hidden, grad_span(grads, kHeadFc2Weight), grad_span(grads, kHeadFc2Bias));
  const T slope = static_cast<T>(spec.leaky_slope);
  for (std::size_t k = 0; k < g_hidden.size(); ++k) {
    if (cache.pre[k] <= 0) g_hidden[k] *= slope;
  }
  std::vector<T> g_features(want_feature_grad ? cache.features.size() : 0, T(0));
  dense_backward<T>(cspan(cache.features), cspan(params.at(kHeadFc1Weight).values), cspan(g_hidden), g_features,
                    grad_span(grads, kHeadFc1Weight), grad_span(grads, kHeadFc1Bias));
  return g_features;
}

// ---------------------------------------------------------------------------
// Whole-network objectives used by training and gradient checks

template <class T>
struct DiscriminatorPass {
  ExtractorCache<T> extractor;
  HeadCache<T> head;
  T logit{};
};

template <class T>
T discriminator_logit(const DiscriminatorSpec& spec, const BasicParams<T>& params, std::span<const T> patch,
                      int patch_size, DiscriminatorPass<T>* pass = nullptr) {
  const Shape3 shape{spec.extractor.in_channels, patch_size, patch_size};
  const auto features = extractor_forward<T>(spec.extractor, params, patch, shape, pass ? &pass->extractor : nullptr);
  const T logit = head_forward<T>(spec, params, cspan(features), pass ? &pass->head : nullptr);
  if (pass) pass->logit = logit;
  return logit;
}

/// Mean binary cross-entropy of the discriminator on labeled patches; accumulates
/// gradients for every non-frozen discriminator parameter present in `grads`.
template <class T>
T discriminator_loss(const DiscriminatorSpec& spec, const BasicParams<T>& params,
                     const std::vector<std::vector<T>>& patches, const std::vector<int>& labels, int patch_size,
                     BasicParams<T>* grads) {
  T loss = 0;
  const T inv = T(1) / static_cast<T>(patches.size());
  const bool extractor_trainable =
      grads != nullptr && !spec.extractor.blocks.empty() && grads->contains(ExtractorSpec::weight_name(1, 1));
  for (std::size_t i = 0; i < patches.size(); ++i) {
    DiscriminatorPass<T> pass;
    const T logit = discriminator_logit<T>(spec, params, cspan(patches[i]), patch_size, grads ? &pass : nullptr);
    loss += (labels[i] ? softplus(-logit) : softplus(logit)) * inv;
    if (!grads) continue;
    const T dlogit = (sigmoid(logit) - static_cast<T>(labels[i] ? 1 : 0)) * inv;
    auto g_features = head_backward<T>(spec, params, pass.head, dlogit, grads, extractor_trainable);
    if (extractor_trainable) extractor_backward<T>(spec.extractor, params, pass.extractor, cspan(g_features), grads, false);
  }
  return loss;
}

/// Non-saturating generator objective mean(-log D(G(z))); accumulates generator gradients.
template <class T>
T generator_loss(const GeneratorSpec& gspec, const BasicParams<T>& gparams, const DiscriminatorSpec& dspec,
                 const BasicParams<T>& dparams, const std::vector<std::vector<T>>& noise,
                 BasicParams<T>* ggrads) {
  T loss = 0;
  const T inv = T(1) / static_cast<T>(noise.size());
  const int patch = gspec.output_size();
  for (const auto& z : noise) {
    GeneratorCache<T> gcache;
    const auto fake = generator_forward<T>(gspec, gparams, cspan(z), ggrads ? &gcache : nullptr);
    DiscriminatorPass<T> pass;
    const T logit = discriminator_logit<T>(dspec, dparams, cspan(fake), patch, ggrads ? &pass : nullptr);
    loss += softplus(-logit) * inv;
    if (!ggrads) continue;
    const T dlogit = (sigmoid(logit) - T(1)) * inv;
    auto g_features = head_backward<T>(dspec, dparams, pass.head, dlogit, nullptr, true);
    auto g_patch = extractor_backward<T>(dspec.extractor, dparams, pass.extractor, cspan(g_features), nullptr, true);
    generator_backward<T>(gspec, gparams, gcache, cspan(g_patch), *ggrads);
  }
  return loss;
}

}  // namespace aed::nn
