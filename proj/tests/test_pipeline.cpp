#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include "aed/pipeline.hpp"
#include "support.hpp"

using namespace aed;
using aed::testing::crowd_scene;
using aed::testing::error_code_of;
using aed::testing::small_config;
using aed::testing::TempDir;
namespace fs = std::filesystem;

namespace {

// Two normal training clips; two test clips where agent 2 speeds up over frames 12..27.
PipelineConfig scene_config(const fs::path& root) {
  auto c = small_config();
  c.output = root.string();
  c.data = {(root / "data" / "Train").string(), (root / "data" / "Test").string(), "", Layout::generic};
  c.synth.train = {crowd_scene("a", 32, 1), crowd_scene("b", 32, 2)};
  for (std::uint64_t seed : {3, 4}) {
    auto s = crowd_scene("t", 32, seed);
    s.anomalies.push_back({2, 12, 27, 5.0, std::nullopt, std::nullopt, std::nullopt});
    c.synth.test.push_back(s);
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AED_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<TempDir>("pipeline");
    config_ = scene_config(dir_->path());
    run_synth(dir_->path() / "data", config_);
    train_ = load_clips(config_.data.train, Layout::generic);
    test_ = load_clips(config_.data.test, Layout::generic);
    model_ = train_model(train_, config_);
  }
  static void TearDownTestSuite() {
    model_ = {};
    dir_.reset();
  }

  static std::unique_ptr<TempDir> dir_;
  static PipelineConfig config_;
  static std::vector<FrameSequence> train_, test_;
  static Model model_;
};

std::unique_ptr<TempDir> Pipeline::dir_;
PipelineConfig Pipeline::config_;
std::vector<FrameSequence> Pipeline::train_, Pipeline::test_;
Model Pipeline::model_;

}  // namespace

TEST_F(Pipeline, SynthLayout) {
  ASSERT_EQ(train_.size(), 2u);
  ASSERT_EQ(test_.size(), 2u);
  EXPECT_EQ(test_[0].id, "Test001");
  EXPECT_EQ(test_[0].length(), 32u);
  EXPECT_TRUE(fs::is_directory(dir_->path() / "data" / "Test" / "Test002_gt"));
  EXPECT_FALSE(fs::exists(dir_->path() / "data" / "Train" / "Train001_gt"));
}

TEST_F(Pipeline, TrainingIsReproducible) {
  const auto again = train_model(train_, config_);
  ASSERT_EQ(again.trace.size(), model_.trace.size());
  for (std::size_t i = 0; i < again.trace.size(); ++i) {
    EXPECT_EQ(again.trace[i].d_loss, model_.trace[i].d_loss);
    EXPECT_EQ(again.trace[i].g_loss, model_.trace[i].g_loss);
  }
  for (const auto& [name, t] : model_.discriminator.tensors) EXPECT_EQ(again.discriminator.tensors.at(name).values, t.values) << name;
  EXPECT_EQ(again.background.pixels().size(), model_.background.pixels().size());
  EXPECT_TRUE(std::equal(again.background.pixels().begin(), again.background.pixels().end(), model_.background.pixels().begin()));
  EXPECT_EQ(again.motion.histogram.hue_bins, model_.motion.histogram.hue_bins);
  EXPECT_EQ(again.motion.histogram.mag_bins, model_.motion.histogram.mag_bins);
}

TEST_F(Pipeline, DetectionIgnoresJobsAndSurvivesSaveLoad) {
  const auto one = detect_clip(test_[0], model_, config_, {1, false});
  const auto three = detect_clip(test_[0], model_, config_, {3, false});
  save_model(dir_->path() / "model", model_);
  const auto loaded = load_model(dir_->path() / "model");
  const auto reloaded = detect_clip(test_[0], loaded, loaded.config, {1, false});
  ASSERT_EQ(one.frames.size(), 32u);
  for (std::size_t t = 0; t < one.frames.size(); ++t) {
    EXPECT_EQ(one.frames[t].frame_score, three.frames[t].frame_score) << t;
    EXPECT_EQ(one.frames[t].frame_score, reloaded.frames[t].frame_score) << t;
    EXPECT_TRUE(std::equal(one.frames[t].pixel_map.pixels().begin(), one.frames[t].pixel_map.pixels().end(),
                           reloaded.frames[t].pixel_map.pixels().begin()));
  }
}

TEST_F(Pipeline, EarlyFramesCarryOnlyAvailableEvidence) {
  const auto r = detect_clip(test_[0], model_, config_, {1, true});
  // Frame 0: no flow and no stack.
  EXPECT_EQ(r.frames[0].frame_score, 0.0);
  // Frames 1..3: motion only, so the map takes values in {0, 1 - alpha}.
  for (int t = 1; t < 4; ++t) {
    for (auto v : r.frames[static_cast<std::size_t>(t)].pixel_map.pixels()) {
      EXPECT_TRUE(v == 0.0f || v == static_cast<float>(1.0 - config_.fusion.alpha)) << t;
    }
  }
  ASSERT_TRUE(r.intermediates.has_value());
  EXPECT_EQ(r.intermediates->flow[0].magnitude.pixel_count(), 0u);
  EXPECT_EQ(r.intermediates->motion.size(), 32u);
}

TEST_F(Pipeline, AnomalousFramesScoreHigherThanNormalOnes) {
  double normal = 0, abnormal = 0;
  int n_normal = 0, n_abnormal = 0;
  for (const auto& clip : train_) {
    for (const auto& f : detect_clip(clip, model_, config_).frames) {
      normal += f.frame_score;
      ++n_normal;
    }
  }
  for (const auto& clip : test_) {
    for (const auto& f : detect_clip(clip, model_, config_).frames) {
      if (f.t >= 14 && f.t <= 27) {
        abnormal += f.frame_score;
        ++n_abnormal;
      }
    }
  }
  EXPECT_LT(normal / n_normal, abnormal / n_abnormal);
}

TEST_F(Pipeline, ResultsAndEvaluation) {
  std::vector<ClipResult> results;
  for (const auto& clip : test_) results.push_back(detect_clip(clip, model_, config_));
  const auto out = dir_->path() / "results";
  write_results(out, results, test_, 0.5, true);
  const auto back = read_results(out, true);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].id, "Test002");
  for (std::size_t t = 0; t < 32; ++t) {
    EXPECT_DOUBLE_EQ(back[0].frames[t].frame_score, results[0].frames[t].frame_score);
    EXPECT_TRUE(std::equal(back[0].frames[t].pixel_map.pixels().begin(), back[0].frames[t].pixel_map.pixels().end(),
                           results[0].frames[t].pixel_map.pixels().begin()));
  }
  const auto summary = run_eval(out, config_.data.test, EvalMode::both, out);
  ASSERT_TRUE(summary.frame.has_value());
  ASSERT_TRUE(summary.pixel.has_value());
  EXPECT_EQ(summary.timing.frames, 64u);
  EXPECT_EQ(summary.timing.total, summary.timing.mean.total());
  for (const char* f : {"frame_roc.csv", "pixel_roc.csv", "frame_scores.csv", "report.txt", "scores.csv", "timing.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_NE(run_report(out).find("frame_auc="), std::string::npos);
}

TEST_F(Pipeline, PerfectScoresGiveUnitAuc) {
  // Score each frame by its ground-truth flag, map by its mask.
  std::vector<ClipResult> results;
  for (const auto& clip : test_) {
    const auto gt = load_ground_truth(dir_->path() / "data" / "Test" / (clip.id + "_gt"), clip.size());
    ClipResult r;
    r.id = clip.id;
    for (std::size_t t = 0; t < clip.length(); ++t) {
      FrameResult f;
      f.t = static_cast<int>(t);
      f.pixel_map = FloatImage(clip.size());
      const auto& m = (*gt.pixel_masks)[t];
      for (std::size_t k = 0; k < m.pixel_count(); ++k) f.pixel_map.pixels()[k] = m.pixels()[k];
      f.frame_score = gt.frame_flags[t];
      r.frames.push_back(f);
    }
    results.push_back(r);
  }
  const auto out = dir_->path() / "perfect";
  write_results(out, results, test_, 0.5, false);
  const auto summary = run_eval(out, config_.data.test, EvalMode::both, out);
  EXPECT_DOUBLE_EQ(summary.frame->auc, 1.0);
  EXPECT_DOUBLE_EQ(summary.frame->eer, 0.0);
  EXPECT_DOUBLE_EQ(summary.pixel->auc, 1.0);
}

TEST_F(Pipeline, PixelModeNeedsMasks) {
  std::vector<ClipResult> results{detect_clip(test_[0], model_, config_)};
  const auto out = dir_->path() / "nomasks";
  write_results(out, results, test_, 0.5, false);
  // A frame-range file gives flags but no masks.
  const auto gt = dir_->path() / "ranges";
  fs::create_directories(gt);
  write_file(gt / "ranges.m", "TestVideoFile{1}.gt_frame = [13:28];\n");
  const auto summary = run_eval(out, gt, EvalMode::frame, out);
  EXPECT_TRUE(summary.frame.has_value());
  EXPECT_EQ(error_code_of([&] { run_eval(out, gt, EvalMode::pixel, out); }), Errc::missing_masks);
}

TEST_F(Pipeline, Mismatches) {
  auto other = config_;
  other.network.discriminator.hidden += 1;
  EXPECT_EQ(error_code_of([&] { check_compatible(other, model_); }), Errc::geometry_mismatch);
  EXPECT_FALSE(error_code_of([&] { check_compatible(config_, model_); }).has_value());
  FrameSequence small;
  small.id = "small";
  small.frames.assign(3, Gray8(80, 60, 0));
  EXPECT_EQ(error_code_of([&] { detect_clip(small, model_, config_); }), Errc::geometry_mismatch);
  const TempDir empty("empty");
  EXPECT_TRUE(error_code_of([&] { load_clips(empty.path(), Layout::generic); }).has_value());
}

TEST(Synth, GlobalSeed) {
  EXPECT_EQ(effective_seed(5, 0), 5u);
  EXPECT_NE(effective_seed(5, 1), 5u);
  EXPECT_NE(effective_seed(5, 1), effective_seed(5, 2));
  EXPECT_EQ(effective_seed(5, 9), effective_seed(5, 9));
  EXPECT_EQ(error_code_of([] { run_synth("/tmp/unused", PipelineConfig{}); }), Errc::config);
}

TEST(Cli, ExitCodes) {
  const TempDir dir("cli_codes");
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("bogus"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
  write_file(dir / "bad.json", R"({"motion": {"nope": 1}})");
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(run_cli("train --config " + (dir / "missing.json").string()), 1);
  write_file(dir / "ok.json", serialize_config(small_config()));
  EXPECT_EQ(run_cli("train --config " + (dir / "ok.json").string() + " --data " + (dir / "nowhere").string()), 2);
  EXPECT_EQ(run_cli("detect --model " + (dir / "nowhere").string()), 2);

  // A learning rate this large overflows the weights in the first steps.
  auto blowup = scene_config(dir.path());
  blowup.train.learning_rate = 1e30;
  write_file(dir / "blowup.json", serialize_config(blowup));
  ASSERT_EQ(run_cli("synth --config " + (dir / "blowup.json").string()), 0);
  EXPECT_EQ(run_cli("train --config " + (dir / "blowup.json").string()), 3);
}

TEST(Cli, EndToEndIsReproducible) {
  const TempDir dir("cli_e2e");
  write_file(dir / "c.json", serialize_config(scene_config(dir.path())));
  const auto cfg = "--config " + (dir / "c.json").string();
  ASSERT_EQ(run_cli("synth " + cfg), 0);
  for (const char* run : {"r1", "r2"}) {
    const auto model = (dir / run / "model").string();
    const auto results = (dir / run / "results").string();
    ASSERT_EQ(run_cli("train " + cfg + " --model " + model), 0);
    ASSERT_EQ(run_cli("detect " + cfg + " --jobs 2 --model " + model + " --out " + results + " --overlay"), 0);
    ASSERT_EQ(run_cli("eval --results " + results + " --gt " + (dir / "data" / "Test").string()), 0);
    ASSERT_EQ(run_cli("report --results " + results), 0);
  }
  EXPECT_EQ(slurp(dir / "r1" / "model" / "loss.csv"), slurp(dir / "r2" / "model" / "loss.csv"));
  EXPECT_EQ(slurp(dir / "r1" / "results" / "scores.csv"), slurp(dir / "r2" / "results" / "scores.csv"));
  EXPECT_EQ(slurp(dir / "r1" / "results" / "report.txt").substr(0, 40), slurp(dir / "r2" / "results" / "report.txt").substr(0, 40));
  EXPECT_FALSE(slurp(dir / "r1" / "model" / "loss.csv").empty());
  EXPECT_TRUE(fs::is_directory(dir / "r1" / "results" / "overlays"));

  // A different global seed changes the trained networks.
  ASSERT_EQ(run_cli("train " + cfg + " --seed 5 --model " + (dir / "r3" / "model").string()), 0);
  EXPECT_NE(slurp(dir / "r1" / "model" / "loss.csv"), slurp(dir / "r3" / "model" / "loss.csv"));
}
