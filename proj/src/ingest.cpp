#include "aed/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "aed/image_io.hpp"

namespace fs = std::filesystem;

namespace aed {
namespace {

bool is_image_extension(const fs::path& p, Layout layout) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (layout == Layout::ucsd) return ext == ".tif" || ext == ".tiff" || ext == ".bmp" || ext == ".png" || ext == ".pgm";
  return ext == ".tif" || ext == ".tiff" || ext == ".bmp" || ext == ".png" || ext == ".pgm" || ext == ".pbm" ||
         ext == ".ppm" || ext == ".jpg" || ext == ".jpeg";
}

std::optional<long long> trailing_number(const std::string& stem) {
  auto end = stem.find_last_of("0123456789");
  if (end == std::string::npos) return std::nullopt;
  auto begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  return std::stoll(stem.substr(begin, end - begin + 1));
}

std::vector<fs::path> numbered_images(const fs::path& dir, Layout layout) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    if (is_image_extension(entry.path(), layout)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    auto na = trailing_number(a.stem().string());
    auto nb = trailing_number(b.stem().string());
    if (na && nb && *na != *nb) return *na < *nb;
    if (na.has_value() != nb.has_value()) return na.has_value();
    return a.filename() < b.filename();
  });
  return files;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic noise in [-1, 1] keyed by (seed, a, b, c).
double hash_noise(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix(seed ^ splitmix(a ^ splitmix(b ^ splitmix(c))));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

/// Wraps a center coordinate into [-extent/2, limit + extent/2).
double wrap_center(double c, int limit, int extent) {
  const double period = limit + extent;
  double shifted = std::fmod(c + extent / 2.0, period);
  if (shifted < 0) shifted += period;
  return shifted - extent / 2.0;
}

struct AgentState {
  double x, y;
  double speed, direction;
  int intensity;
  bool visible;
  bool abnormal;
};

AgentState effective(const AgentSpec& agent, const std::vector<AnomalySpec>& anomalies, std::size_t index, int t) {
  AgentState s{agent.x, agent.y, agent.speed, agent.direction, agent.intensity, agent.visible, false};
  for (const auto& a : anomalies) {
    if (a.agent != index || !a.active(t)) continue;
    s.abnormal = true;
    if (a.speed) s.speed = *a.speed;
    if (a.direction) s.direction = *a.direction;
    if (a.intensity) s.intensity = *a.intensity;
    if (a.visible) s.visible = *a.visible;
  }
  return s;
}

}  // namespace

Layout parse_layout(const std::string& name) {
  if (name == "ucsd") return Layout::ucsd;
  if (name == "generic") return Layout::generic;
  throw Error(Errc::config, "unknown layout '" + name + "' (expected ucsd|generic)");
}

FrameSequence load_sequence(const fs::path& dir, Layout layout) {
  if (!fs::is_directory(dir)) throw Error(Errc::missing_directory, "no such directory: " + dir.string());

  FrameSequence seq;
  seq.id = dir.filename().string();
  if (seq.id.empty()) seq.id = dir.parent_path().filename().string();
  for (const auto& file : numbered_images(dir, layout)) {
    auto frame = read_gray(file);
    if (!frame) continue;
    if (!seq.frames.empty() && !(frame->size() == seq.size())) {
      throw Error(Errc::geometry_mismatch, "frame " + file.string() + " is " + std::to_string(frame->width()) + "x" +
                                               std::to_string(frame->height()) + ", expected " +
                                               std::to_string(seq.size().width) + "x" +
                                               std::to_string(seq.size().height));
    }
    seq.frames.push_back(std::move(*frame));
  }
  if (seq.frames.empty()) throw Error(Errc::no_frames, "no decodable frames in " + dir.string());
  return seq;
}

GroundTruth load_ground_truth(const fs::path& dir, Size geometry, std::optional<std::size_t> expected_frames) {
  if (!fs::is_directory(dir)) throw Error(Errc::missing_directory, "no such directory: " + dir.string());
  GroundTruth gt;
  gt.pixel_masks.emplace();
  for (const auto& file : numbered_images(dir, Layout::generic)) {
    auto raw = read_gray(file);
    if (!raw) continue;
    if (!(raw->size() == geometry)) {
      throw Error(Errc::geometry_mismatch, "mask " + file.string() + " does not match the " +
                                               std::to_string(geometry.width) + "x" +
                                               std::to_string(geometry.height) + " sequence");
    }
    Mask mask(geometry);
    auto src = raw->pixels();
    auto dst = mask.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= 128 ? 1 : 0;
    gt.frame_flags.push_back(count_set(mask) > 0 ? 1 : 0);
    gt.pixel_masks->push_back(std::move(mask));
  }
  if (gt.frame_flags.empty()) throw Error(Errc::no_frames, "no decodable masks in " + dir.string());
  if (expected_frames && *expected_frames != gt.frame_flags.size()) {
    throw Error(Errc::count_mismatch, std::to_string(gt.frame_flags.size()) + " masks in " + dir.string() +
                                          " for a sequence of " + std::to_string(*expected_frames) + " frames");
  }
  return gt;
}

std::vector<fs::path> discover_clips(const fs::path& root, Layout layout) {
  if (!fs::is_directory(root)) throw Error(Errc::missing_directory, "no such directory: " + root.string());
  if (!numbered_images(root, layout).empty()) return {root};
  std::vector<fs::path> clips;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.ends_with("_gt") || name.front() == '.') continue;
    if (!numbered_images(entry.path(), layout).empty()) clips.push_back(entry.path());
  }
  std::sort(clips.begin(), clips.end());
  if (clips.empty()) throw Error(Errc::no_frames, "no clips with frames under " + root.string());
  return clips;
}

std::optional<fs::path> mask_dir_for(const fs::path& clip_dir) {
  auto name = clip_dir.filename().string();
  if (name.empty()) name = clip_dir.parent_path().filename().string();
  auto candidate = clip_dir.parent_path() / (name + "_gt");
  if (clip_dir.filename().empty()) candidate = clip_dir.parent_path().parent_path() / (name + "_gt");
  if (fs::is_directory(candidate)) return candidate;
  return std::nullopt;
}

std::map<int, std::vector<std::pair<int, int>>> parse_ucsd_annotations(const fs::path& m_file) {
  std::ifstream in(m_file);
  if (!in) throw Error(Errc::io, "cannot open " + m_file.string());
  // Lines look like: TestVideoFile{end+1}.gt_frame = [60:152, 170:180];
  const std::regex line_re(R"(gt_frame\s*=\s*\[([^\]]*)\])");
  const std::regex range_re(R"((\d+)\s*:\s*(\d+))");
  std::map<int, std::vector<std::pair<int, int>>> out;
  int clip = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_search(line, m, line_re)) continue;
    ++clip;
    std::string body = m[1];
    auto& ranges = out[clip];
    for (std::sregex_iterator it(body.begin(), body.end(), range_re), end; it != end; ++it) {
      ranges.emplace_back(std::stoi((*it)[1]), std::stoi((*it)[2]));
    }
  }
  return out;
}

GroundTruth ground_truth_from_ranges(std::size_t frame_count, const std::vector<std::pair<int, int>>& ranges) {
  GroundTruth gt;
  gt.frame_flags.assign(frame_count, 0);
  for (auto [first, last] : ranges) {
    for (int f = std::max(first, 1); f <= last && f <= static_cast<int>(frame_count); ++f) gt.frame_flags[f - 1] = 1;
  }
  return gt;
}

void write_sequence(const fs::path& dir, const FrameSequence& seq) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "%04zu.png", i);
    write_gray(dir / name, seq.frames[i]);
  }
}

void write_masks(const fs::path& dir, const GroundTruth& gt) {
  if (!gt.pixel_masks) throw Error(Errc::missing_masks, "ground truth has no pixel masks");
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < gt.pixel_masks->size(); ++i) {
    const auto& mask = (*gt.pixel_masks)[i];
    Gray8 img(mask.size());
    for (std::size_t k = 0; k < mask.pixel_count(); ++k) img.pixels()[k] = mask.pixels()[k] ? 255 : 0;
    std::snprintf(name, sizeof name, "%04zu.png", i);
    write_gray(dir / name, img);
  }
}

void validate(const SceneSpec& spec) {
  if (spec.num_frames <= 0) throw Error(Errc::invalid_argument, "scene '" + spec.id + "' has zero frames");
  if (spec.width <= 0 || spec.height <= 0) throw Error(Errc::invalid_argument, "scene geometry must be positive");
  if (spec.agents.empty() && !spec.anomalies.empty()) {
    throw Error(Errc::invalid_argument, "scene '" + spec.id + "' has anomalies but no agents");
  }
  for (const auto& a : spec.anomalies) {
    if (a.agent >= spec.agents.size()) {
      throw Error(Errc::invalid_argument, "anomaly refers to agent " + std::to_string(a.agent) + " of " +
                                              std::to_string(spec.agents.size()));
    }
    if (a.last_frame < a.first_frame) throw Error(Errc::invalid_argument, "anomaly frame range is reversed");
  }
  for (const auto& ag : spec.agents) {
    if (ag.width <= 0 || ag.height <= 0) throw Error(Errc::invalid_argument, "agent size must be positive");
  }
}

Gray8 render_background(const SceneSpec& spec) {
  Gray8 bg(spec.width, spec.height);
  const auto& b = spec.background;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double v = b.level;
      switch (b.kind) {
        case BackgroundSpec::Kind::constant: break;
        case BackgroundSpec::Kind::noise:
          v += b.amplitude * hash_noise(b.seed, 0xB6, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y));
          break;
        case BackgroundSpec::Kind::gradient:
          v += b.amplitude * (spec.width > 1 ? 2.0 * x / (spec.width - 1) - 1.0 : 0.0);
          break;
      }
      bg(x, y) = clamp_u8(v);
    }
  }
  return bg;
}

SyntheticClip synthesize(const SceneSpec& spec) {
  validate(spec);
  const Gray8 background = render_background(spec);

  SyntheticClip out;
  out.sequence.id = spec.id;
  out.truth.pixel_masks.emplace();

  std::vector<double> px(spec.agents.size()), py(spec.agents.size());
  for (std::size_t i = 0; i < spec.agents.size(); ++i) {
    px[i] = spec.agents[i].x;
    py[i] = spec.agents[i].y;
  }

  for (int t = 0; t < spec.num_frames; ++t) {
    Gray8 frame = background;
    Mask truth(spec.width, spec.height);
    for (std::size_t i = 0; i < spec.agents.size(); ++i) {
      const auto& agent = spec.agents[i];
      const AgentState s = effective(agent, spec.anomalies, i, t);
      if (t > 0) {
        px[i] += s.speed * std::cos(s.direction);
        py[i] += s.speed * std::sin(s.direction);
      }
      if (!s.visible) continue;

      const int w = agent.width;
      const int h = agent.shape == AgentShape::disk ? agent.width : agent.height;
      const double cx = wrap_center(px[i], spec.width, w);
      const double cy = wrap_center(py[i], spec.height, h);
      const int left = static_cast<int>(std::floor(cx - w / 2.0 + 0.5));
      const int top = static_cast<int>(std::floor(cy - h / 2.0 + 0.5));
      const double r2 = (w / 2.0) * (w / 2.0);
      for (int ly = 0; ly < h; ++ly) {
        const int y = top + ly;
        if (y < 0 || y >= spec.height) continue;
        for (int lx = 0; lx < w; ++lx) {
          const int x = left + lx;
          if (x < 0 || x >= spec.width) continue;
          if (agent.shape == AgentShape::disk) {
            const double dx = lx + 0.5 - w / 2.0;
            const double dy = ly + 0.5 - h / 2.0;
            if (dx * dx + dy * dy > r2) continue;
          }
          double v = s.intensity;
          if (agent.texture != 0) v += agent.texture * hash_noise(spec.seed, 0xA6 + i, lx, ly);
          frame(x, y) = clamp_u8(v);
          truth(x, y) = s.abnormal ? 1 : 0;
        }
      }
    }
    out.truth.frame_flags.push_back(count_set(truth) > 0 ? 1 : 0);
    out.truth.pixel_masks->push_back(std::move(truth));
    out.sequence.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace aed
