#include <gtest/gtest.h>

#include <fstream>

#include "aed/image_io.hpp"
#include "aed/ingest.hpp"
#include "support.hpp"

using namespace aed;
using aed::testing::error_code_of;
using aed::testing::TempDir;

namespace {

SceneSpec single_disk(int frames) {
  SceneSpec s;
  s.id = "disk";
  s.num_frames = frames;
  s.background = {BackgroundSpec::Kind::constant, 60, 0};
  AgentSpec a;
  a.shape = AgentShape::disk;
  a.width = 12;
  a.speed = 1.0;
  a.direction = 0.0;
  a.x = 30;
  a.y = 60;
  s.agents.push_back(a);
  return s;
}

}  // namespace

TEST(Ingest, LoadsFramesAtUcsdPeds1Geometry) {
  TempDir dir("peds1");
  FrameSequence seq;
  for (int i = 0; i < 200; ++i) seq.frames.emplace_back(238, 158, static_cast<std::uint8_t>(i));
  write_sequence(dir.path(), seq);
  const auto loaded = load_sequence(dir.path(), Layout::generic);
  EXPECT_EQ(loaded.length(), 200u);
  EXPECT_EQ(loaded.size(), (Size{238, 158}));
  EXPECT_EQ(loaded.frames[137](5, 5), 137);
}

TEST(Ingest, SingleBlackFrame) {
  TempDir dir("black");
  write_gray(dir / "000.png", Gray8(20, 10, 0));
  const auto seq = load_sequence(dir.path());
  ASSERT_EQ(seq.length(), 1u);
  for (auto v : seq.frames[0].pixels()) EXPECT_EQ(v, 0);
}

TEST(Ingest, MixedGeometryIsAnError) {
  TempDir dir("mixed");
  write_gray(dir / "1.png", Gray8(20, 10));
  write_gray(dir / "2.png", Gray8(21, 10));
  EXPECT_EQ(error_code_of([&] { load_sequence(dir.path()); }), Errc::geometry_mismatch);
}

TEST(Ingest, DistinctErrorsForMissingAndEmpty) {
  TempDir dir("empty");
  EXPECT_EQ(error_code_of([&] { load_sequence(dir / "nope"); }), Errc::missing_directory);
  std::ofstream(dir / "notes.txt") << "not an image";
  std::ofstream(dir / "broken.png") << "not a png either";
  EXPECT_EQ(error_code_of([&] { load_sequence(dir.path()); }), Errc::no_frames);
}

TEST(Ingest, NumericOrderingIgnoresListingOrder) {
  TempDir dir("order");
  // Lexicographic order would put 10 before 2 and 9.
  for (int i : {10, 2, 9, 1, 100}) write_gray(dir / ("frame" + std::to_string(i) + ".png"), Gray8(4, 4, static_cast<std::uint8_t>(i)));
  const auto seq = load_sequence(dir.path());
  std::vector<int> order;
  for (const auto& f : seq.frames) order.push_back(f(0, 0));
  EXPECT_EQ(order, (std::vector<int>{1, 2, 9, 10, 100}));
}

TEST(Ingest, ColorFramesUseLuminance) {
  TempDir dir("color");
  std::vector<std::uint8_t> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255};
  write_rgb(dir / "0.png", {4, 1}, rgb);
  const auto seq = load_sequence(dir.path());
  const auto& f = seq.frames[0];
  EXPECT_NEAR(f(0, 0), 76, 1);   // 0.299 * 255
  EXPECT_NEAR(f(1, 0), 150, 1);  // 0.587 * 255
  EXPECT_NEAR(f(2, 0), 29, 1);   // 0.114 * 255
  EXPECT_EQ(f(3, 0), 255);
}

TEST(Ingest, GroundTruthFlagsFollowMasks) {
  TempDir dir("gt");
  for (int i = 0; i < 5; ++i) {
    Gray8 m(30, 20, 0);
    if (i == 3) {
      for (int k = 0; k < 10; ++k) m(5 + k, 7) = 255;
    }
    write_gray(dir / ("m" + std::to_string(i) + ".png"), m);
  }
  const auto gt = load_ground_truth(dir.path(), {30, 20});
  EXPECT_EQ(gt.frame_flags, (std::vector<std::uint8_t>{0, 0, 0, 1, 0}));
  ASSERT_TRUE(gt.has_masks());
  EXPECT_EQ(count_set((*gt.pixel_masks)[3]), 10u);
}

TEST(Ingest, AllZeroMasksGiveNoFlags) {
  TempDir dir("gt0");
  for (int i = 0; i < 3; ++i) write_gray(dir / (std::to_string(i) + ".png"), Gray8(8, 8, 0));
  const auto gt = load_ground_truth(dir.path(), {8, 8});
  for (auto f : gt.frame_flags) EXPECT_EQ(f, 0);
}

TEST(Ingest, MaskThresholdIsMidGray) {
  TempDir dir("gtmid");
  Gray8 m(4, 1, 0);
  m(0, 0) = 127;
  m(1, 0) = 128;
  m(2, 0) = 200;
  write_gray(dir / "0.png", m);
  const auto gt = load_ground_truth(dir.path(), {4, 1});
  const auto& mask = (*gt.pixel_masks)[0];
  EXPECT_EQ(mask(0, 0), 0);
  EXPECT_EQ(mask(1, 0), 1);
  EXPECT_EQ(mask(2, 0), 1);
}

TEST(Ingest, GroundTruthGeometryAndCountErrors) {
  TempDir dir("gtbad");
  write_gray(dir / "0.png", Gray8(100, 100, 0));
  EXPECT_EQ(error_code_of([&] { load_ground_truth(dir.path(), {238, 158}); }), Errc::geometry_mismatch);
  EXPECT_EQ(error_code_of([&] { load_ground_truth(dir.path(), {100, 100}, 2); }), Errc::count_mismatch);
}

TEST(Ingest, UcsdAnnotationRanges) {
  TempDir dir("m");
  std::ofstream(dir / "UCSDped1.m") << "TestVideoFile = {};\n"
                                       "TestVideoFile{end+1}.gt_frame = [60:152];\n"
                                       "TestVideoFile{end+1}.gt_frame = [50:175];\n"
                                       "TestVideoFile{end+1}.gt_frame = [5:90, 140:200];\n";
  const auto ranges = parse_ucsd_annotations(dir / "UCSDped1.m");
  ASSERT_EQ(ranges.size(), 3u);
  EXPECT_EQ(ranges.at(3), (std::vector<std::pair<int, int>>{{5, 90}, {140, 200}}));
  const auto gt = ground_truth_from_ranges(200, ranges.at(1));
  EXPECT_EQ(gt.frame_flags[58], 0);
  EXPECT_EQ(gt.frame_flags[59], 1);
  EXPECT_EQ(gt.frame_flags[151], 1);
  EXPECT_EQ(gt.frame_flags[152], 0);
  EXPECT_FALSE(gt.has_masks());
}

TEST(Ingest, DiscoverClipsSkipsMaskDirectories) {
  TempDir dir("layout");
  for (const char* name : {"Test002", "Test001", "Test001_gt"}) {
    std::filesystem::create_directories(dir / name);
    write_gray(dir / name / "000.png", Gray8(4, 4));
  }
  const auto clips = discover_clips(dir.path(), Layout::ucsd);
  ASSERT_EQ(clips.size(), 2u);
  EXPECT_EQ(clips[0].filename(), "Test001");
  ASSERT_TRUE(mask_dir_for(clips[0]).has_value());
  EXPECT_FALSE(mask_dir_for(clips[1]).has_value());
}

TEST(Synth, DiskWithoutAnomaliesHasNoFlags) {
  const auto clip = synthesize(single_disk(50));
  EXPECT_EQ(clip.sequence.length(), 50u);
  for (auto f : clip.truth.frame_flags) EXPECT_EQ(f, 0);
}

TEST(Synth, SpeedOverrideFlagsExactlyItsRange) {
  auto spec = single_disk(50);
  AnomalySpec an;
  an.agent = 0;
  an.first_frame = 20;
  an.last_frame = 40;
  an.speed = 5.0;
  spec.anomalies.push_back(an);
  const auto clip = synthesize(spec);
  for (int t = 0; t < 50; ++t) EXPECT_EQ(clip.truth.frame_flags[t], (t >= 20 && t <= 40) ? 1 : 0) << t;
}

TEST(Synth, Deterministic) {
  auto spec = aed::testing::crowd_scene("c", 30, 7);
  const auto a = synthesize(spec);
  const auto b = synthesize(spec);
  EXPECT_EQ(a.sequence.frames, b.sequence.frames);
  spec.seed = 8;
  EXPECT_NE(synthesize(spec).sequence.frames, a.sequence.frames);
}

TEST(Synth, AnomalyWithoutAgentsIsRejected) {
  SceneSpec s;
  s.num_frames = 10;
  s.anomalies.push_back({});
  EXPECT_EQ(error_code_of([&] { synthesize(s); }), Errc::invalid_argument);
  SceneSpec empty;
  EXPECT_EQ(error_code_of([&] { synthesize(empty); }), Errc::invalid_argument);
}

TEST(Synth, MaskAreaEqualsRenderedAgentArea) {
  auto spec = aed::testing::crowd_scene("c", 40, 3, 2);
  AgentSpec fast;
  fast.width = 10;
  fast.height = 14;
  fast.x = 40;
  fast.y = 90;
  fast.speed = 5;
  fast.visible = false;
  spec.agents.push_back(fast);
  AnomalySpec an;
  an.agent = 2;
  an.first_frame = 5;
  an.last_frame = 12;
  an.visible = true;
  spec.anomalies.push_back(an);
  const auto clip = synthesize(spec);
  const auto bg = render_background(spec);
  for (int t = 0; t < 40; ++t) {
    const auto& mask = (*clip.truth.pixel_masks)[static_cast<std::size_t>(t)];
    if (t < 5 || t > 12) {
      EXPECT_EQ(count_set(mask), 0u);
      continue;
    }
    // Fully inside the frame on these frames, on its own lane.
    EXPECT_EQ(count_set(mask), 140u) << t;
    std::size_t differs = 0;
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) differs += mask(x, y) && clip.sequence.frames[t](x, y) != bg(x, y);
    }
    EXPECT_GT(differs, 100u);
  }
}

TEST(Synth, RoundTripThroughDisk) {
  TempDir dir("rt");
  const auto clip = synthesize(aed::testing::crowd_scene("c", 12, 5));
  write_sequence(dir / "clip", clip.sequence);
  const auto loaded = load_sequence(dir / "clip", Layout::generic);
  EXPECT_EQ(loaded.frames, clip.sequence.frames);
}

TEST(Synth, AgentsWrapAroundBorders) {
  auto spec = single_disk(200);
  spec.agents[0].speed = 2.0;
  const auto clip = synthesize(spec);
  // After travelling well past the right border the disk is visible again.
  std::size_t visible = 0;
  for (auto v : clip.sequence.frames[150].pixels()) visible += v != 60;
  EXPECT_GT(visible, 50u);
}
