#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aed/ingest.hpp"
#include "aed/motion.hpp"
#include "aed/patches.hpp"

namespace aed {

/// Seconds spent per pipeline stage for one frame.
struct StageTimes {
  double preprocess = 0.0;
  double flow = 0.0;
  double representation = 0.0;
  double classification = 0.0;

  [[nodiscard]] double total() const { return preprocess + flow + representation + classification; }
};

struct FrameResult {
  int t = 0;
  double frame_score = 0.0;  // max of pixel_map
  FloatImage pixel_map;      // per-pixel abnormality in [0,1]
  StageTimes stage_times;
};

struct PatchScore {
  int x = 0;  // patch origin
  int y = 0;
  double abnormality = 0.0;
};

/// pixel_map = alpha * A + (1 - alpha) * M, with A the largest abnormality of any patch covering
/// the pixel (0 when uncovered) and M the motion mask bit.
FrameResult fuse(std::span<const PatchScore> patch_scores, const MotionMask& motion_mask, int patch_size, double alpha,
                 int t = 0);

struct ConfusionCounts {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;

  [[nodiscard]] std::size_t positives() const { return tp + fn; }
  [[nodiscard]] std::size_t negatives() const { return fp + tn; }
  [[nodiscard]] double tpr() const { return positives() ? double(tp) / double(positives()) : 0.0; }
  [[nodiscard]] double fpr() const { return negatives() ? double(fp) / double(negatives()) : 0.0; }
  [[nodiscard]] double fnr() const { return positives() ? double(fn) / double(positives()) : 0.0; }
};

struct RocPoint {
  double threshold = 0.0;  // scores >= threshold are predicted abnormal
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) at +inf to (1,1)
  double auc = 0.0;
  double eer = 0.0;
};

/// Threshold sweep over all distinct scores (ties form one threshold), trapezoidal AUC.
RocCurve roc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EerPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Crossing of the curve with the line through (0,1) and (1,0), interpolated linearly between sweep points.
EerPoint eer_point(const RocCurve& curve);
double eer(const RocCurve& curve);

/// Frame flagged iff frame_score > threshold.
ConfusionCounts frame_level_labels(std::span<const FrameResult> results, const GroundTruth& gt, double threshold);

/// An abnormal frame is a true positive iff pixels above threshold cover at least 40% of its
/// ground-truth pixels; a normal frame is a false positive iff any pixel exceeds the threshold.
ConfusionCounts pixel_level_labels(std::span<const FrameResult> results, const GroundTruth& gt, double threshold);

/// Largest score s such that at least 40% of the mask pixels have map value >= s.
double localization_score(const FloatImage& pixel_map, const Mask& mask);

/// Per-frame scores whose threshold sweep reproduces pixel_level_labels: abnormal frames use
/// localization_score, normal frames use frame_score. Appends to `scores`/`labels`.
void append_pixel_level_scores(std::span<const FrameResult> results, const GroundTruth& gt,
                               std::vector<double>& scores, std::vector<std::uint8_t>& labels);

struct TimingReport {
  StageTimes mean;
  double total = 0.0;  // sum of the stage means
  std::size_t frames = 0;
};

TimingReport timing_report(std::span<const FrameResult> results);
TimingReport timing_report(std::span<const StageTimes> times);

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);

struct Summary {
  std::optional<RocCurve> frame;
  std::optional<RocCurve> pixel;
  TimingReport timing;
};

/// key=value lines: frame_auc, frame_eer, pixel_auc, pixel_eer and per-stage timing rows.
std::string format_summary(const Summary& summary);

}  // namespace aed
