#include "aed/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "aed/image_io.hpp"

namespace aed {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Runs fn(i) for i in [0, n) on at most `jobs` threads. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

std::string frame_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", t);
  return buf;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<Gray8> equalized_frames(const FrameSequence& clip, int jobs) {
  std::vector<Gray8> eq(clip.length());
  parallel_for(clip.length(), jobs, [&](std::size_t i) { eq[i] = equalize(clip.frames[i]); });
  return eq;
}

Gray8 pooled_background(const std::vector<FrameSequence>& clips, int jobs) {
  MedianBackground bg;
  for (const auto& clip : clips) {
    if (!clips.empty()) require_same_size(clip.size(), clips.front().size(), "training clip geometry");
    for (const auto& f : equalized_frames(clip, jobs)) bg.add(f);
  }
  return bg.median();
}

/// Mask overlay: gray frame with red where the map exceeds the threshold.
std::vector<std::uint8_t> overlay_rgb(const Gray8& frame, const FloatImage& map, double threshold) {
  std::vector<std::uint8_t> rgb(frame.pixel_count() * 3);
  auto src = frame.pixels();
  auto m = map.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const bool hit = m[i] > threshold;
    rgb[3 * i + 0] = hit ? 255 : src[i];
    rgb[3 * i + 1] = hit ? src[i] / 2 : src[i];
    rgb[3 * i + 2] = hit ? src[i] / 2 : src[i];
  }
  return rgb;
}

Gray8 to_gray(const FloatImage& img, double scale) {
  Gray8 out(img.size());
  auto s = img.pixels();
  auto d = out.pixels();
  for (std::size_t i = 0; i < s.size(); ++i) {
    d[i] = static_cast<std::uint8_t>(std::clamp(s[i] * scale + 0.5, 0.0, 255.0));
  }
  return out;
}

Gray8 mask_to_gray(const Mask& m) {
  Gray8 out(m.size());
  auto s = m.pixels();
  auto d = out.pixels();
  for (std::size_t i = 0; i < s.size(); ++i) d[i] = s[i] ? 255 : 0;
  return out;
}

std::optional<int> trailing_int(const std::string& s) {
  std::smatch m;
  static const std::regex re("(\\d+)$");
  if (!std::regex_search(s, m, re)) return std::nullopt;
  return std::stoi(m[1].str());
}

}  // namespace

std::uint64_t effective_seed(std::uint64_t scene_seed, std::uint64_t global_seed) {
  return global_seed == 0 ? scene_seed : mix(scene_seed ^ mix(global_seed));
}

std::vector<FrameSequence> load_clips(const fs::path& root, Layout layout) {
  std::vector<FrameSequence> clips;
  for (const auto& dir : discover_clips(root, layout)) clips.push_back(load_sequence(dir, layout));
  return clips;
}

std::vector<Patch> training_patches(const std::vector<FrameSequence>& clips, const Gray8& background,
                                    const PipelineConfig& config, int jobs) {
  std::vector<Patch> patches;
  const auto grid = config.patches.train_grid();
  for (const auto& clip : clips) {
    require_same_size(clip.size(), background.size(), "clip " + clip.id + " vs background");
    const auto eq = equalized_frames(clip, jobs);
    std::vector<EdgeImage> edge(clip.length());
    std::vector<ForegroundMask> fg(clip.length());
    parallel_for(clip.length(), jobs, [&](std::size_t t) {
      fg[t] = foreground(eq[t], background, config.tau_fg);
      edge[t] = edges(eq[t], fg[t]);
    });
    std::vector<std::vector<Patch>> per_frame(clip.length());
    parallel_for(clip.length(), jobs, [&](std::size_t t) {
      if (t < static_cast<std::size_t>(kStackOffsets.back())) return;
      per_frame[t] = extract(stack(edge, static_cast<int>(t)), fg[t], grid, config.patches.rho_min);
    });
    for (auto& v : per_frame) {
      for (auto& p : v) patches.push_back(std::move(p));
    }
  }
  return patches;
}

MotionModel fit_motion(const std::vector<FrameSequence>& clips, const Gray8& background, const PipelineConfig& config,
                       int jobs) {
  MotionModel model;
  model.params = config.motion;
  const auto& mp = config.motion;
  model.histogram.hue_bins.assign(static_cast<std::size_t>(mp.hue_bins), 0);
  model.histogram.mag_bins.assign(static_cast<std::size_t>(mp.mag_bins), 0);
  model.histogram.mag_ceiling = mp.mag_ceiling;
  bool any = false;
  for (const auto& clip : clips) {
    if (clip.length() < 2) continue;
    std::vector<MotionHistogram> partial(clip.length() - 1);
    parallel_for(partial.size(), jobs, [&](std::size_t i) {
      const auto polar = to_polar(current_frame_flow(clip.frames[i], clip.frames[i + 1], config.optflow));
      auto& h = partial[i];
      h.hue_bins.assign(static_cast<std::size_t>(mp.hue_bins), 0);
      h.mag_bins.assign(static_cast<std::size_t>(mp.mag_bins), 0);
      h.mag_ceiling = mp.mag_ceiling;
      if (mp.foreground_only) {
        const auto fg = foreground(equalize(clip.frames[i + 1]), background, config.tau_fg);
        accumulate(h, polar, mp.min_speed, &fg);
      } else {
        accumulate(h, polar, mp.min_speed);
      }
    });
    for (const auto& h : partial) model.histogram.merge(h);
    any = true;
  }
  if (!any) throw Error(Errc::empty_input, "motion model needs clips with at least two frames");
  model.abnormal = tail(model.histogram, mp.tail_fraction);
  return model;
}

Model train_model(const std::vector<FrameSequence>& clips, const PipelineConfig& config, const Log& log) {
  config.validate();
  if (clips.empty()) throw Error(Errc::no_frames, "no training clips");
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  Model model;
  model.config = config;
  model.background = pooled_background(clips, config.jobs);
  say("background: " + std::to_string(clips.size()) + " clips");
  model.motion = fit_motion(clips, model.background, config, config.jobs);
  say("motion: " + std::to_string(model.motion.histogram.total) + " moving pixels, " +
      std::to_string(model.motion.abnormal.hue_abnormal.size()) + " hue / " +
      std::to_string(model.motion.abnormal.mag_abnormal.size()) + " speed bins abnormal");
  const auto patches = training_patches(clips, model.background, config, config.jobs);
  say("patches: " + std::to_string(patches.size()));

  std::optional<NetworkParams> extractor;
  if (!config.network.extractor_weights.empty()) {
    extractor = extractor_load(config.network.extractor_weights, config.network.discriminator.extractor);
  }
  const int every = std::max(1, config.train.iterations / 20);
  auto progress = [&](const LossRecord& r) {
    if (r.iteration % every == 0 || r.iteration == config.train.iterations) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "iter %d d_loss=%.4f g_loss=%.4f d_acc=%.3f", r.iteration, r.d_loss, r.g_loss,
                    r.d_accuracy);
      say(buf);
    }
  };
  auto result = train(patches, config.network.generator, config.network.discriminator, config.train_config(),
                      extractor ? &*extractor : nullptr, progress);
  model.generator = std::move(result.generator);
  model.discriminator = std::move(result.discriminator);
  model.trace = std::move(result.trace);
  return model;
}

void write_loss_csv(const fs::path& path, const std::vector<LossRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "iteration,d_loss,g_loss,d_accuracy\n";
  for (const auto& r : trace) {
    out << r.iteration << ',' << fmt(r.d_loss) << ',' << fmt(r.g_loss) << ',' << fmt(r.d_accuracy) << '\n';
  }
}

void save_model(const fs::path& dir, const Model& model) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "manifest.json", serialize_config(model.config));
  write_gray(dir / "background.png", model.background);
  model.motion.save(dir / "motion.json");
  save_checkpoint(dir / "network.aedt", model.generator, model.discriminator);
  write_loss_csv(dir / "loss.csv", model.trace);
}

Model load_model(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::missing_directory, "no model directory " + dir.string());
  Model model;
  model.config = parse_config(read_text(dir / "manifest.json"));
  auto bg = read_gray(dir / "background.png");
  if (!bg) throw Error(Errc::io, "cannot decode " + (dir / "background.png").string());
  model.background = std::move(*bg);
  model.motion = MotionModel::load(dir / "motion.json");
  auto [g, d] = load_checkpoint(dir / "network.aedt", model.config.network.generator,
                                model.config.network.discriminator, model.config.patches.patch_size);
  model.generator = std::move(g);
  model.discriminator = std::move(d);
  return model;
}

void check_compatible(const PipelineConfig& config, const Model& model) {
  auto network_only = [](const PipelineConfig& c) {
    PipelineConfig n;
    n.network = c.network;
    n.network.extractor_weights.clear();
    n.patches.patch_size = c.patches.patch_size;
    n.motion = c.motion;
    return serialize_config(n);
  };
  if (network_only(config) != network_only(model.config)) {
    throw Error(Errc::geometry_mismatch, "detection config differs from the model in network, patch or motion settings");
  }
}

ClipResult detect_clip(const FrameSequence& clip, const Model& model, const PipelineConfig& config,
                       const DetectOptions& options) {
  if (clip.frames.empty()) throw Error(Errc::no_frames, "clip " + clip.id + " has no frames");
  require_same_size(clip.size(), model.background.size(), "clip " + clip.id + " vs model background");
  const std::size_t n = clip.length();
  const int jobs = options.jobs;

  ClipResult out;
  out.id = clip.id;
  out.frames.resize(n);
  std::vector<Gray8> eq(n);
  std::vector<ForegroundMask> fg(n);
  std::vector<EdgeImage> edge(n);
  std::vector<FlowPolar> flow(n);

  parallel_for(n, jobs, [&](std::size_t t) {
    auto start = Clock::now();
    eq[t] = equalize(clip.frames[t]);
    fg[t] = foreground(eq[t], model.background, config.tau_fg);
    edge[t] = edges(eq[t], fg[t]);
    out.frames[t].stage_times.preprocess = seconds_since(start);
    if (t > 0) {
      start = Clock::now();
      flow[t] = to_polar(current_frame_flow(clip.frames[t - 1], clip.frames[t], config.optflow));
      out.frames[t].stage_times.flow = seconds_since(start);
    }
  });

  std::vector<MotionMask> motion(options.keep_intermediates ? n : 0);
  const auto grid = config.patches.test_grid();
  const int P = config.patches.patch_size;
  parallel_for(n, jobs, [&](std::size_t t) {
    auto& fr = out.frames[t];
    auto start = Clock::now();
    std::vector<Patch> patches;
    if (t >= static_cast<std::size_t>(kStackOffsets.back())) {
      patches = extract(stack(edge, static_cast<int>(t)), fg[t], grid, config.patches.rho_min);
    }
    fr.stage_times.representation = seconds_since(start);

    start = Clock::now();
    const auto scores = score_patches(patches, model.config.network.discriminator, model.discriminator);
    std::vector<PatchScore> ps(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) ps[i] = {patches[i].x, patches[i].y, 1.0 - scores[i]};
    MotionMask mm(clip.size(), 0);
    if (t > 0) {
      mm = mask(flow[t], model.motion.abnormal, model.motion.histogram, model.motion.params.min_speed);
      if (model.motion.params.foreground_only) {
        for (std::size_t i = 0; i < mm.pixel_count(); ++i) mm.pixels()[i] &= fg[t].pixels()[i];
      }
    }
    const auto stage = fr.stage_times;
    fr = fuse(ps, mm, P, config.fusion.alpha, static_cast<int>(t));
    fr.stage_times = stage;
    fr.stage_times.classification = seconds_since(start);
    if (options.keep_intermediates) motion[t] = std::move(mm);
  });

  if (options.keep_intermediates) {
    out.intermediates = Intermediates{std::move(eq), std::move(fg), std::move(edge), std::move(flow), std::move(motion)};
  }
  return out;
}

void write_results(const fs::path& dir, const std::vector<ClipResult>& results,
                   const std::vector<FrameSequence>& clips, double overlay_threshold, bool overlays) {
  std::error_code ec;
  fs::create_directories(dir / "maps", ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  std::ofstream scores(dir / "scores.csv");
  std::ofstream timing(dir / "timing.csv");
  if (!scores || !timing) throw Error(Errc::io, "cannot write into " + dir.string());
  scores << "clip,frame,score\n";
  timing << "clip,frame,preprocess,flow,representation,classification,total\n";
  for (std::size_t c = 0; c < results.size(); ++c) {
    const auto& r = results[c];
    TensorArchive maps;
    for (const auto& f : r.frames) {
      scores << r.id << ',' << f.t << ',' << fmt(f.frame_score) << '\n';
      const auto& s = f.stage_times;
      timing << r.id << ',' << f.t << ',' << fmt(s.preprocess) << ',' << fmt(s.flow) << ',' << fmt(s.representation)
             << ',' << fmt(s.classification) << ',' << fmt(s.total()) << '\n';
      nn::Tensor tensor;
      tensor.shape = {static_cast<std::size_t>(f.pixel_map.height()), static_cast<std::size_t>(f.pixel_map.width())};
      tensor.values.assign(f.pixel_map.pixels().begin(), f.pixel_map.pixels().end());
      maps.entries.emplace_back("frame_" + frame_name(static_cast<std::size_t>(f.t)), std::move(tensor));
    }
    maps.save(dir / "maps" / (r.id + ".aedt"));

    if (overlays && c < clips.size()) {
      const auto odir = dir / "overlays" / r.id;
      fs::create_directories(odir);
      for (const auto& f : r.frames) {
        const auto& frame = clips[c].frames[static_cast<std::size_t>(f.t)];
        write_rgb(odir / (frame_name(static_cast<std::size_t>(f.t)) + ".png"), frame.size(),
                  overlay_rgb(frame, f.pixel_map, overlay_threshold));
      }
    }
    if (r.intermediates) {
      const auto idir = dir / "intermediates" / r.id;
      fs::create_directories(idir);
      const auto& im = *r.intermediates;
      for (std::size_t t = 0; t < im.equalized.size(); ++t) {
        const auto name = frame_name(t);
        write_gray(idir / ("equalized_" + name + ".pgm"), im.equalized[t]);
        write_gray(idir / ("foreground_" + name + ".pgm"), mask_to_gray(im.foreground[t]));
        write_gray(idir / ("edges_" + name + ".pgm"), to_gray(im.edges[t], 255.0));
        if (t > 0) {
          write_gray(idir / ("motion_" + name + ".pgm"), mask_to_gray(im.motion[t]));
          write_rgb(idir / ("flow_" + name + ".png"), im.flow[t].size(),
                    flow_to_rgb(im.flow[t]));
        }
      }
    }
  }
}

std::vector<ClipResult> read_results(const fs::path& dir, bool with_maps) {
  const auto path = dir / "scores.csv";
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_directory, "no scores.csv in " + dir.string());
  std::vector<ClipResult> results;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw Error(Errc::io, "malformed row in " + path.string() + ": " + line);
    if (results.empty() || results.back().id != cells[0]) {
      results.emplace_back();
      results.back().id = cells[0];
    }
    FrameResult f;
    f.t = std::stoi(cells[1]);
    f.frame_score = std::stod(cells[2]);
    results.back().frames.push_back(std::move(f));
  }

  std::ifstream timing(dir / "timing.csv");
  if (timing) {
    std::getline(timing, line);
    std::size_t c = 0, i = 0;
    while (std::getline(timing, line)) {
      const auto cells = split(line, ',');
      if (cells.size() != 7) continue;
      while (c < results.size() && (results[c].id != cells[0] || i >= results[c].frames.size())) {
        if (results[c].id == cells[0]) break;
        ++c;
        i = 0;
      }
      if (c >= results.size() || i >= results[c].frames.size()) break;
      auto& s = results[c].frames[i++].stage_times;
      s = {std::stod(cells[2]), std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5])};
    }
  }

  if (with_maps) {
    for (auto& r : results) {
      const auto archive = TensorArchive::load(dir / "maps" / (r.id + ".aedt"));
      for (auto& f : r.frames) {
        const auto name = "frame_" + frame_name(static_cast<std::size_t>(f.t));
        const auto* tensor = archive.find(name);
        if (!tensor) throw Error(Errc::missing_name, "map " + name + " missing for clip " + r.id);
        if (tensor->shape.size() != 2) throw Error(Errc::shape_mismatch, "map " + name + " is not 2-D");
        f.pixel_map = FloatImage(tensor->shape[1], tensor->shape[0]);
        std::copy(tensor->values.begin(), tensor->values.end(), f.pixel_map.pixels().begin());
      }
    }
  }
  return results;
}

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "frame") return EvalMode::frame;
  if (name == "pixel") return EvalMode::pixel;
  if (name == "both") return EvalMode::both;
  throw Error(Errc::invalid_argument, "unknown evaluation mode '" + name + "' (expected frame|pixel|both)");
}

GroundTruth find_ground_truth(const fs::path& gt_root, const ClipResult& clip, Size geometry) {
  const auto masks = gt_root / (clip.id + "_gt");
  if (fs::is_directory(masks)) return load_ground_truth(masks, geometry, clip.frames.size());

  if (fs::is_directory(gt_root)) {
    std::vector<fs::path> m_files;
    for (const auto& e : fs::directory_iterator(gt_root)) {
      if (e.is_regular_file() && e.path().extension() == ".m") m_files.push_back(e.path());
    }
    std::sort(m_files.begin(), m_files.end());
    const auto index = trailing_int(clip.id);
    if (!m_files.empty() && index) {
      const auto ranges = parse_ucsd_annotations(m_files.front());
      const auto it = ranges.find(*index);
      if (it != ranges.end()) return ground_truth_from_ranges(clip.frames.size(), it->second);
    }
  }
  throw Error(Errc::missing_directory, "no ground truth for clip " + clip.id + " under " + gt_root.string());
}

Summary run_eval(const fs::path& results_dir, const fs::path& gt_root, EvalMode mode, const fs::path& out_dir) {
  const auto results = read_results(results_dir, true);
  if (results.empty()) throw Error(Errc::empty_input, "no frames in " + results_dir.string());
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  std::vector<double> frame_scores, pixel_scores;
  std::vector<std::uint8_t> frame_labels, pixel_labels;
  std::ofstream rows(out_dir / "frame_scores.csv");
  if (!rows) throw Error(Errc::io, "cannot write into " + out_dir.string());
  rows << "clip,frame,score,label\n";
  std::vector<StageTimes> times;
  bool any_masks = false;
  for (const auto& r : results) {
    if (r.frames.empty()) continue;
    const auto gt = find_ground_truth(gt_root, r, r.frames.front().pixel_map.size());
    if (gt.length() != r.frames.size()) {
      throw Error(Errc::count_mismatch, "clip " + r.id + ": " + std::to_string(r.frames.size()) +
                                            " scored frames vs " + std::to_string(gt.length()) + " ground-truth frames");
    }
    for (std::size_t i = 0; i < r.frames.size(); ++i) {
      frame_scores.push_back(r.frames[i].frame_score);
      frame_labels.push_back(gt.frame_flags[i]);
      rows << r.id << ',' << r.frames[i].t << ',' << fmt(r.frames[i].frame_score) << ','
           << int(gt.frame_flags[i]) << '\n';
      times.push_back(r.frames[i].stage_times);
    }
    if (mode != EvalMode::frame && gt.has_masks()) {
      any_masks = true;
      append_pixel_level_scores(r.frames, gt, pixel_scores, pixel_labels);
    }
  }

  Summary summary;
  summary.timing = timing_report(times);
  if (mode != EvalMode::pixel) {
    summary.frame = roc(frame_scores, frame_labels);
    write_roc_csv(out_dir / "frame_roc.csv", *summary.frame);
  }
  if (mode != EvalMode::frame) {
    if (!any_masks) {
      if (mode == EvalMode::pixel) {
        throw Error(Errc::missing_masks, "pixel-level evaluation needs <clip>_gt mask directories under " +
                                             gt_root.string());
      }
    } else {
      summary.pixel = roc(pixel_scores, pixel_labels);
      write_roc_csv(out_dir / "pixel_roc.csv", *summary.pixel);
    }
  }
  write_text(out_dir / "report.txt", format_summary(summary));
  return summary;
}

std::string run_report(const fs::path& results_dir) {
  const auto results = read_results(results_dir, false);
  std::vector<StageTimes> times;
  for (const auto& r : results) {
    for (const auto& f : r.frames) times.push_back(f.stage_times);
  }
  const auto t = timing_report(times);
  std::ostringstream out;
  const auto report = results_dir / "report.txt";
  if (fs::exists(report)) {
    for (const auto& line : split(read_text(report), '\n')) {
      if (line.starts_with("frame_") || line.starts_with("pixel_")) out << line << '\n';
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %12s\n", "stage", "mean_seconds");
  out << buf;
  const std::pair<const char*, double> rows[] = {{"preprocess", t.mean.preprocess},
                                                 {"optical_flow", t.mean.flow},
                                                 {"representation", t.mean.representation},
                                                 {"classification", t.mean.classification},
                                                 {"total", t.total}};
  for (const auto& [name, v] : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %12.6f\n", name, v);
    out << buf;
  }
  out << "frames " << t.frames << '\n';
  return out.str();
}

void run_synth(const fs::path& out_dir, const PipelineConfig& config) {
  if (config.synth.train.empty() && config.synth.test.empty()) {
    throw Error(Errc::config, "synth: no scenes configured");
  }
  auto emit = [&](const std::vector<SceneSpec>& scenes, const char* split_name, bool masks) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      auto spec = scenes[i];
      spec.seed = effective_seed(spec.seed, config.seed);
      spec.background.seed = effective_seed(spec.background.seed, config.seed);
      const auto clip = synthesize(spec);
      char name[32];
      std::snprintf(name, sizeof name, "%s%03zu", split_name, i + 1);
      const auto dir = out_dir / split_name / name;
      write_sequence(dir, clip.sequence);
      if (masks) write_masks(out_dir / split_name / (std::string(name) + "_gt"), clip.truth);
    }
  };
  emit(config.synth.train, "Train", false);
  emit(config.synth.test, "Test", true);
}

}  // namespace aed
