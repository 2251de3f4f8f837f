#include "aed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace aed {

FrameResult fuse(std::span<const PatchScore> patch_scores, const MotionMask& motion_mask, int patch_size, double alpha,
                 int t) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::invalid_argument, "alpha must be in [0,1]");
  const Size size = motion_mask.size();
  FloatImage appearance(size);
  for (const auto& p : patch_scores) {
    if (p.x < 0 || p.y < 0 || p.x + patch_size > size.width || p.y + patch_size > size.height) {
      throw Error(Errc::geometry_mismatch, "patch at (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                                               ") lies outside the frame");
    }
    const auto a = static_cast<float>(std::clamp(p.abnormality, 0.0, 1.0));
    for (int y = p.y; y < p.y + patch_size; ++y) {
      auto row = appearance.row(y);
      for (int x = p.x; x < p.x + patch_size; ++x) row[static_cast<std::size_t>(x)] = std::max(row[static_cast<std::size_t>(x)], a);
    }
  }

  FrameResult r;
  r.t = t;
  r.pixel_map = FloatImage(size);
  auto a = appearance.pixels();
  auto m = motion_mask.pixels();
  auto out = r.pixel_map.pixels();
  double best = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = alpha * a[i] + (1.0 - alpha) * (m[i] ? 1.0 : 0.0);
    out[i] = static_cast<float>(v);
    best = std::max(best, static_cast<double>(out[i]));
  }
  r.frame_score = best;
  return r;
}

RocCurve roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error(Errc::count_mismatch, "scores and labels differ in length");
  if (scores.empty()) throw Error(Errc::empty_input, "ROC needs at least one sample");
  const auto positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(Errc::single_class, "ROC needs both normal and abnormal samples");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({threshold, double(fp) / double(negatives), double(tp) / double(positives)});
  }

  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  curve.auc = area;
  curve.eer = eer(curve);
  return curve;
}

EerPoint eer_point(const RocCurve& curve) {
  // f = FPR - FNR = FPR + TPR - 1 is non-decreasing along the curve, -1 at (0,0) and +1 at (1,1).
  const auto f = [](const RocPoint& p) { return p.fpr + p.tpr - 1.0; };
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto& a = curve.points[i];
    const auto& b = curve.points[i + 1];
    const double fa = f(a), fb = f(b);
    if (fa == 0.0) return {a.fpr, a.tpr};
    if (fa < 0.0 && fb >= 0.0) {
      const double lambda = -fa / (fb - fa);
      return {a.fpr + lambda * (b.fpr - a.fpr), a.tpr + lambda * (b.tpr - a.tpr)};
    }
  }
  const auto& last = curve.points.back();
  return {last.fpr, last.tpr};
}

double eer(const RocCurve& curve) { return eer_point(curve).fpr; }

ConfusionCounts frame_level_labels(std::span<const FrameResult> results, const GroundTruth& gt, double threshold) {
  if (results.size() != gt.length()) {
    throw Error(Errc::count_mismatch, std::to_string(results.size()) + " results for " + std::to_string(gt.length()) +
                                          " ground-truth frames");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const bool detected = results[i].frame_score > threshold;
    if (gt.frame_flags[i]) {
      (detected ? c.tp : c.fn) += 1;
    } else {
      (detected ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

namespace {

const Mask& abnormal_mask(const GroundTruth& gt, std::size_t i) {
  if (!gt.pixel_masks || i >= gt.pixel_masks->size() || count_set((*gt.pixel_masks)[i]) == 0) {
    throw Error(Errc::missing_masks, "abnormal frame " + std::to_string(i) + " has no ground-truth pixel mask");
  }
  return (*gt.pixel_masks)[i];
}

}  // namespace

ConfusionCounts pixel_level_labels(std::span<const FrameResult> results, const GroundTruth& gt, double threshold) {
  if (results.size() != gt.length()) {
    throw Error(Errc::count_mismatch, std::to_string(results.size()) + " results for " + std::to_string(gt.length()) +
                                          " ground-truth frames");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& map = results[i].pixel_map;
    if (!gt.frame_flags[i]) {
      (results[i].frame_score > threshold ? c.fp : c.tn) += 1;
      continue;
    }
    const Mask& mask = abnormal_mask(gt, i);
    require_same_size(map.size(), mask.size(), "pixel map vs mask");
    std::size_t truth = 0, covered = 0;
    auto m = mask.pixels();
    auto v = map.pixels();
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (!m[k]) continue;
      ++truth;
      covered += v[k] > threshold;
    }
    // covered / truth >= 40%, in integers
    (5 * covered >= 2 * truth ? c.tp : c.fn) += 1;
  }
  return c;
}

double localization_score(const FloatImage& pixel_map, const Mask& mask) {
  require_same_size(pixel_map.size(), mask.size(), "pixel map vs mask");
  std::vector<float> values;
  auto m = mask.pixels();
  auto v = pixel_map.pixels();
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m[k]) values.push_back(v[k]);
  }
  if (values.empty()) throw Error(Errc::missing_masks, "empty ground-truth mask");
  // Smallest count satisfying 5 * count >= 2 * n.
  const std::size_t needed = (2 * values.size() + 4) / 5;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(needed - 1), values.end(),
                   std::greater<>());
  return values[needed - 1];
}

void append_pixel_level_scores(std::span<const FrameResult> results, const GroundTruth& gt,
                               std::vector<double>& scores, std::vector<std::uint8_t>& labels) {
  if (results.size() != gt.length()) {
    throw Error(Errc::count_mismatch, std::to_string(results.size()) + " results for " + std::to_string(gt.length()) +
                                          " ground-truth frames");
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (gt.frame_flags[i]) {
      scores.push_back(localization_score(results[i].pixel_map, abnormal_mask(gt, i)));
      labels.push_back(1);
    } else {
      scores.push_back(results[i].frame_score);
      labels.push_back(0);
    }
  }
}

TimingReport timing_report(std::span<const StageTimes> times) {
  TimingReport r;
  r.frames = times.size();
  if (times.empty()) return r;
  for (const auto& t : times) {
    r.mean.preprocess += t.preprocess;
    r.mean.flow += t.flow;
    r.mean.representation += t.representation;
    r.mean.classification += t.classification;
  }
  const double n = static_cast<double>(times.size());
  r.mean.preprocess /= n;
  r.mean.flow /= n;
  r.mean.representation /= n;
  r.mean.classification /= n;
  r.total = r.mean.total();
  return r;
}

TimingReport timing_report(std::span<const FrameResult> results) {
  std::vector<StageTimes> times;
  times.reserve(results.size());
  for (const auto& r : results) times.push_back(r.stage_times);
  return timing_report(times);
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "threshold,fpr,tpr\n";
  char line[128];
  for (const auto& p : curve.points) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g\n", p.threshold, p.fpr, p.tpr);
    out << line;
  }
}

std::string format_summary(const Summary& s) {
  std::ostringstream out;
  char buf[96];
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.6f\n", key, v);
    out << buf;
  };
  if (s.frame) {
    kv("frame_auc", s.frame->auc);
    kv("frame_eer", s.frame->eer);
  }
  if (s.pixel) {
    kv("pixel_auc", s.pixel->auc);
    kv("pixel_eer", s.pixel->eer);
  }
  kv("time_preprocess", s.timing.mean.preprocess);
  kv("time_optical_flow", s.timing.mean.flow);
  kv("time_representation", s.timing.mean.representation);
  kv("time_classification", s.timing.mean.classification);
  kv("time_total", s.timing.total);
  out << "timed_frames=" << s.timing.frames << '\n';
  return out.str();
}

}  // namespace aed
