#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aed/optflow.hpp"

namespace aed {

struct MotionParams {
  int hue_bins = 36;
  int mag_bins = 32;
  double mag_ceiling = 10.0;  // px/frame mapped to the top speed bin
  double min_speed = 0.5;     // px/frame; slower pixels are treated as static
  double tail_fraction = 0.05;
  /// Count and flag only pixels inside the frame's foreground mask. Keeps the flow
  /// estimator's spill onto static background out of both the histogram and the mask.
  bool foreground_only = true;

  void validate() const;
};

struct MotionHistogram {
  std::vector<std::uint64_t> hue_bins;
  std::vector<std::uint64_t> mag_bins;
  double mag_ceiling = 10.0;
  std::uint64_t total = 0;

  [[nodiscard]] int hue_bin(double hue) const;
  [[nodiscard]] int mag_bin(double magnitude) const;
  /// Bin counts are additive across disjoint inputs.
  void merge(const MotionHistogram& other);
};

/// Lowest-frequency bins per channel whose cumulative mass stays within tail_fraction of the total.
struct AbnormalValueSet {
  std::vector<int> hue_abnormal;  // ascending bin indices
  std::vector<int> mag_abnormal;
  double tail_fraction = 0.05;
};

using MotionMask = Mask;

MotionHistogram fit(std::span<const FlowPolar> flows, int hue_bins, int mag_bins, double mag_ceiling, double min_speed);

/// Accumulates one flow field into an existing histogram.
void accumulate(MotionHistogram& hist, const FlowPolar& flow, double min_speed, const Mask* only = nullptr);

AbnormalValueSet tail(const MotionHistogram& hist, double tail_fraction);

/// Tail of one channel: ascending-count order (ties by index), longest prefix with mass <= fraction * total.
std::vector<int> tail_bins(std::span<const std::uint64_t> counts, std::uint64_t total, double tail_fraction);

MotionMask mask(const FlowPolar& flow, const AbnormalValueSet& sets, const MotionHistogram& hist, double min_speed);

/// Fitted histogram, its abnormal sets and the parameters that produced them.
struct MotionModel {
  static constexpr int kVersion = 1;
  MotionParams params;
  MotionHistogram histogram;
  AbnormalValueSet abnormal;

  [[nodiscard]] std::string to_json() const;
  static MotionModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static MotionModel load(const std::filesystem::path& path);
};

}  // namespace aed
