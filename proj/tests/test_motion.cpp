#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "aed/motion.hpp"
#include "aed/pipeline.hpp"
#include "support.hpp"

using namespace aed;
using aed::testing::error_code_of;
using aed::testing::TempDir;

namespace {

constexpr double kPi = std::numbers::pi;

FlowPolar uniform_polar(int w, int h, float hue, float mag) { return {FloatImage(w, h, hue), FloatImage(w, h, mag)}; }

FlowPolar random_polar(int w, int h, std::uint32_t seed, double max_mag = 12.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> hue(0.0f, static_cast<float>(2 * kPi - 1e-4));
  std::uniform_real_distribution<float> mag(0.0f, static_cast<float>(max_mag));
  FlowPolar p{FloatImage(w, h), FloatImage(w, h)};
  for (auto& v : p.hue.pixels()) v = hue(rng);
  for (auto& v : p.magnitude.pixels()) v = mag(rng);
  return p;
}

MotionHistogram histogram_of(std::vector<std::uint64_t> hue, std::vector<std::uint64_t> mag = {1}) {
  MotionHistogram h;
  h.hue_bins = std::move(hue);
  h.mag_bins = std::move(mag);
  for (auto c : h.hue_bins) h.total += c;
  return h;
}

// Every prefix of the ascending-count order (ties by index); the longest within budget wins.
std::vector<int> brute_force_tail(const std::vector<std::uint64_t>& counts, std::uint64_t total, double fraction) {
  std::vector<int> order(counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return counts[a] != counts[b] ? counts[a] < counts[b] : a < b; });
  std::vector<int> best;
  for (std::size_t len = 0; len <= order.size(); ++len) {
    std::uint64_t mass = 0;
    for (std::size_t k = 0; k < len; ++k) mass += counts[static_cast<std::size_t>(order[k])];
    // Integer comparison: mass <= fraction * total, with fraction given in percent below.
    if (static_cast<double>(mass) <= fraction * static_cast<double>(total) + 1e-9) best.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(len));
  }
  std::sort(best.begin(), best.end());
  return best;
}

double iou(const Mask& a, const Mask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    inter += a.pixels()[i] && b.pixels()[i];
    uni += a.pixels()[i] || b.pixels()[i];
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

}  // namespace

TEST(MotionFit, StaticPixelsAreNotCounted) {
  const std::vector<FlowPolar> flows = {uniform_polar(10, 10, 0, 0)};
  const auto h = fit(flows, 36, 32, 10.0, 0.5);
  EXPECT_EQ(h.total, 0u);
  EXPECT_EQ(h.hue_bins.size(), 36u);
  EXPECT_EQ(h.mag_bins.size(), 32u);
}

TEST(MotionFit, SingleDirectionAndSpeed) {
  const std::vector<FlowPolar> flows = {uniform_polar(10, 10, 0, 1), uniform_polar(10, 10, 0, 1)};
  const auto h = fit(flows, 36, 32, 10.0, 0.5);
  EXPECT_EQ(h.total, 200u);
  EXPECT_EQ(std::count_if(h.hue_bins.begin(), h.hue_bins.end(), [](auto c) { return c > 0; }), 1);
  EXPECT_EQ(std::count_if(h.mag_bins.begin(), h.mag_bins.end(), [](auto c) { return c > 0; }), 1);
  EXPECT_EQ(h.hue_bins[0], 200u);
  EXPECT_EQ(h.mag_bins[3], 200u);  // 1 px/frame of a 10 px/frame ceiling over 32 bins
}

TEST(MotionFit, BinningEdges) {
  MotionHistogram h;
  h.hue_bins.assign(36, 0);
  h.mag_bins.assign(32, 0);
  h.mag_ceiling = 10.0;
  EXPECT_EQ(h.hue_bin(0.0), 0);
  EXPECT_EQ(h.hue_bin(kPi / 18 - 1e-6), 0);
  EXPECT_EQ(h.hue_bin(kPi / 18 + 1e-6), 1);
  EXPECT_EQ(h.hue_bin(2 * kPi - 1e-6), 35);
  EXPECT_EQ(h.mag_bin(9.99), 31);
  EXPECT_EQ(h.mag_bin(10.0), 31);
  EXPECT_EQ(h.mag_bin(250.0), 31);  // overflow clamps to the top bin
}

TEST(MotionFit, SpeedMassSplitsByAgentArea) {
  // Flow painted on the rendered support of two agents moving at 1 and 2 px/frame.
  SceneSpec s;
  s.num_frames = 5;
  s.background = {BackgroundSpec::Kind::constant, 50, 0};
  AgentSpec slow, fast;
  slow.width = 10, slow.height = 20, slow.x = 30, slow.y = 30, slow.intensity = 120;
  fast.width = 16, fast.height = 12, fast.x = 90, fast.y = 70, fast.intensity = 220, fast.speed = 2;
  s.agents = {slow, fast};
  const auto clip = synthesize(s);
  std::vector<FlowPolar> flows;
  std::size_t slow_px = 0, fast_px = 0;
  for (const auto& f : clip.sequence.frames) {
    FlowPolar p{FloatImage(f.size()), FloatImage(f.size())};
    for (std::size_t i = 0; i < f.pixel_count(); ++i) {
      if (f.pixels()[i] == 120) p.magnitude.pixels()[i] = 1.0f, ++slow_px;
      if (f.pixels()[i] == 220) p.magnitude.pixels()[i] = 2.0f, ++fast_px;
    }
    flows.push_back(std::move(p));
  }
  const auto h = fit(flows, 36, 32, 10.0, 0.5);
  EXPECT_EQ(slow_px, 5u * 200);
  EXPECT_EQ(fast_px, 5u * 192);
  EXPECT_EQ(h.mag_bins[3], slow_px);
  EXPECT_EQ(h.mag_bins[6], fast_px);
  EXPECT_EQ(h.total, slow_px + fast_px);
}

TEST(MotionFit, GateRestrictsCounting) {
  MotionHistogram h;
  h.hue_bins.assign(8, 0);
  h.mag_bins.assign(8, 0);
  Mask gate(4, 4, 0);
  gate(1, 1) = gate(2, 3) = 1;
  accumulate(h, uniform_polar(4, 4, 1.0f, 3.0f), 0.5, &gate);
  EXPECT_EQ(h.total, 2u);
}

TEST(MotionFit, MergeIsAdditiveAndChecksLayout) {
  const std::vector<FlowPolar> a = {random_polar(20, 20, 1)}, b = {random_polar(20, 20, 2)};
  const std::vector<FlowPolar> both = {a[0], b[0]};
  auto ha = fit(a, 36, 32, 10.0, 0.5);
  ha.merge(fit(b, 36, 32, 10.0, 0.5));
  const auto hb = fit(both, 36, 32, 10.0, 0.5);
  EXPECT_EQ(ha.hue_bins, hb.hue_bins);
  EXPECT_EQ(ha.mag_bins, hb.mag_bins);
  EXPECT_EQ(ha.total, hb.total);
  EXPECT_EQ(error_code_of([&] { ha.merge(fit(b, 12, 32, 10.0, 0.5)); }), Errc::shape_mismatch);
}

TEST(MotionFit, Errors) {
  EXPECT_EQ(error_code_of([] { fit({}, 36, 32, 10.0, 0.5); }), Errc::empty_input);
  const std::vector<FlowPolar> flows = {uniform_polar(2, 2, 0, 1)};
  EXPECT_EQ(error_code_of([&] { fit(flows, 0, 32, 10.0, 0.5); }), Errc::invalid_argument);
}

TEST(MotionTail, WorkedExample) {
  const auto h = histogram_of({50, 30, 15, 4, 1});
  EXPECT_EQ(tail(h, 0.05).hue_abnormal, (std::vector<int>{3, 4}));
}

TEST(MotionTail, SingleNonzeroBin) {
  const auto h = histogram_of({0, 0, 7, 0});
  EXPECT_EQ(tail(h, 0.05).hue_abnormal, (std::vector<int>{0, 1, 3}));
}

TEST(MotionTail, UniformTwentyBins) {
  const auto h = histogram_of(std::vector<std::uint64_t>(20, 13));
  EXPECT_EQ(tail(h, 0.05).hue_abnormal, (std::vector<int>{0}));
}

TEST(MotionTail, MatchesBruteForceAndIsMaximal) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> nbins(1, 12), count(0, 40);
    std::vector<std::uint64_t> c(static_cast<std::size_t>(nbins(rng)));
    for (auto& v : c) v = static_cast<std::uint64_t>(count(rng) * count(rng) / 8);
    std::uint64_t total = 0;
    for (auto v : c) total += v;
    if (total == 0) continue;
    for (int percent : {0, 1, 5, 10, 25, 50, 100}) {
      const double fraction = percent / 100.0;
      const auto got = tail_bins(c, total, fraction);
      ASSERT_EQ(got, brute_force_tail(c, total, fraction)) << trial << " " << percent;
      std::uint64_t mass = 0;
      for (int b : got) mass += c[static_cast<std::size_t>(b)];
      EXPECT_LE(static_cast<double>(mass), fraction * static_cast<double>(total) + 1e-9);
      for (std::size_t b = 0; b < c.size(); ++b) {
        if (c[b] == 0) {
          EXPECT_TRUE(std::binary_search(got.begin(), got.end(), static_cast<int>(b)));
        }
      }
    }
  }
}

TEST(MotionTail, MonotoneInFraction) {
  const auto h = fit(std::vector<FlowPolar>{random_polar(40, 40, 3, 4.0)}, 36, 32, 10.0, 0.5);
  std::size_t prev_h = 0, prev_m = 0;
  for (double f = 0.0; f <= 1.0; f += 0.05) {
    const auto s = tail(h, f);
    EXPECT_GE(s.hue_abnormal.size(), prev_h);
    EXPECT_GE(s.mag_abnormal.size(), prev_m);
    prev_h = s.hue_abnormal.size();
    prev_m = s.mag_abnormal.size();
  }
}

TEST(MotionTail, EmptyHistogramIsAnError) {
  MotionHistogram h;
  h.hue_bins.assign(4, 0);
  h.mag_bins.assign(4, 0);
  EXPECT_EQ(error_code_of([&] { tail(h, 0.05); }), Errc::empty_input);
}

TEST(MotionMaskOp, StaticFlowFlagsNothing) {
  const auto h = fit(std::vector<FlowPolar>{uniform_polar(8, 8, 0, 1)}, 36, 32, 10.0, 0.5);
  const auto sets = tail(h, 0.05);
  EXPECT_EQ(count_set(mask(uniform_polar(8, 8, 0, 0), sets, h, 0.5)), 0u);
}

TEST(MotionMaskOp, UnseenSpeedIsFlagged) {
  const auto h = fit(std::vector<FlowPolar>{uniform_polar(8, 8, 0, 1)}, 36, 32, 10.0, 0.5);
  const auto sets = tail(h, 0.05);
  EXPECT_EQ(count_set(mask(uniform_polar(8, 8, 0, 1), sets, h, 0.5)), 0u);
  EXPECT_EQ(count_set(mask(uniform_polar(8, 8, 0, 9.9f), sets, h, 0.5)), 64u);
  EXPECT_EQ(count_set(mask(uniform_polar(8, 8, static_cast<float>(kPi), 1), sets, h, 0.5)), 64u);
}

TEST(MotionMaskOp, SoundOverRandomFlows) {
  const auto h = fit(std::vector<FlowPolar>{random_polar(50, 50, 5, 3.0)}, 36, 32, 10.0, 0.5);
  const auto sets = tail(h, 0.05);
  const auto flow = random_polar(50, 50, 6, 12.0);
  const auto m = mask(flow, sets, h, 0.5);
  const auto in = [](const std::vector<int>& v, int b) { return std::binary_search(v.begin(), v.end(), b); };
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    const double mag = flow.magnitude.pixels()[i];
    const bool expect = mag >= 0.5 && (in(sets.hue_abnormal, h.hue_bin(flow.hue.pixels()[i])) || in(sets.mag_abnormal, h.mag_bin(mag)));
    EXPECT_EQ(m.pixels()[i] != 0, expect);
  }
  EXPECT_EQ(mask(flow, sets, h, 0.5), m);
}

TEST(MotionMaskOp, BinLayoutMismatch) {
  const auto h = fit(std::vector<FlowPolar>{uniform_polar(4, 4, 0, 1)}, 36, 32, 10.0, 0.5);
  AbnormalValueSet bad;
  bad.hue_abnormal = {40};
  EXPECT_EQ(error_code_of([&] { mask(uniform_polar(4, 4, 0, 1), bad, h, 0.5); }), Errc::shape_mismatch);
}

TEST(MotionModelDoc, JsonRoundTrip) {
  TempDir dir("motion");
  MotionModel m;
  m.params.foreground_only = false;
  m.histogram = fit(std::vector<FlowPolar>{random_polar(30, 30, 8, 4.0)}, 36, 32, 10.0, 0.5);
  m.abnormal = tail(m.histogram, 0.05);
  m.save(dir / "motion.json");
  const auto back = MotionModel::load(dir / "motion.json");
  EXPECT_EQ(back.histogram.hue_bins, m.histogram.hue_bins);
  EXPECT_EQ(back.histogram.mag_bins, m.histogram.mag_bins);
  EXPECT_EQ(back.abnormal.hue_abnormal, m.abnormal.hue_abnormal);
  EXPECT_EQ(back.abnormal.mag_abnormal, m.abnormal.mag_abnormal);
  EXPECT_FALSE(back.params.foreground_only);
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(error_code_of([] { MotionModel::from_json(R"({"format":"something-else","version":1})"); }), Errc::config);
}

// Trained on speed-1 walkers, tested with one speed-5 agent.
class FastAgent : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new PipelineConfig;
    std::vector<FrameSequence> train;
    for (std::uint64_t k = 0; k < 3; ++k) train.push_back(synthesize(aed::testing::crowd_scene("train", 60, k + 1)).sequence);
    MedianBackground bg;
    for (const auto& clip : train) {
      for (const auto& f : clip.frames) bg.add(equalize(f));
    }
    background_ = new Gray8(bg.median());
    scene_ = new SceneSpec(aed::testing::crowd_scene("test", 30, 9));
    AgentSpec fast;
    fast.width = 16;
    fast.height = 24;
    fast.x = 20;
    fast.y = 104;
    fast.speed = 5;
    fast.texture = 30;
    fast.intensity = 190;
    scene_->agents.push_back(fast);
    AnomalySpec an;
    an.agent = scene_->agents.size() - 1;
    an.first_frame = 0;
    an.last_frame = 29;
    an.speed = 5;
    scene_->anomalies.push_back(an);
    clip_ = new SyntheticClip(synthesize(*scene_));
    model_ = new MotionModel(fit_motion(train, *background_, *config_));
  }
  static void TearDownTestSuite() {
    delete config_;
    delete background_;
    delete scene_;
    delete clip_;
    delete model_;
  }

  static inline PipelineConfig* config_ = nullptr;
  static inline Gray8* background_ = nullptr;
  static inline SceneSpec* scene_ = nullptr;
  static inline SyntheticClip* clip_ = nullptr;
  static inline MotionModel* model_ = nullptr;
};

TEST_F(FastAgent, UngatedMaskCoversTheAgent) {
  for (int t = 6; t < 30; t += 6) {
    const auto& frames = clip_->sequence.frames;
    const auto polar = to_polar(current_frame_flow(frames[t - 1], frames[t], config_->optflow));
    const auto m = mask(polar, model_->abnormal, model_->histogram, config_->motion.min_speed);
    const auto& truth = (*clip_->truth.pixel_masks)[static_cast<std::size_t>(t)];
    std::size_t hit = 0;
    for (std::size_t i = 0; i < m.pixel_count(); ++i) hit += m.pixels()[i] && truth.pixels()[i];
    EXPECT_GE(static_cast<double>(hit), 0.9 * static_cast<double>(count_set(truth))) << t;
  }
}

TEST_F(FastAgent, ForegroundGatedMaskMatchesTheAgent) {
  double sum = 0;
  int n = 0;
  for (int t = 5; t < 30; ++t) {
    const auto& frames = clip_->sequence.frames;
    const auto polar = to_polar(current_frame_flow(frames[t - 1], frames[t], config_->optflow));
    auto m = mask(polar, model_->abnormal, model_->histogram, config_->motion.min_speed);
    const auto fg = foreground(equalize(frames[t]), *background_, config_->tau_fg);
    for (std::size_t i = 0; i < m.pixel_count(); ++i) m.pixels()[i] &= fg.pixels()[i];
    sum += iou(m, (*clip_->truth.pixel_masks)[static_cast<std::size_t>(t)]);
    ++n;
  }
  EXPECT_GE(sum / n, 0.5);
}

TEST_F(FastAgent, FitIsDeterministic) {
  std::vector<FrameSequence> train = {clip_->sequence};
  EXPECT_EQ(fit_motion(train, *background_, *config_).to_json(), fit_motion(train, *background_, *config_, 3).to_json());
}
