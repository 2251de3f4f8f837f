#include "aed/config.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace aed {
namespace {

using json = nlohmann::ordered_json;

/// Reads keys out of one JSON object and rejects whatever is left unread.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw Error(Errc::config, path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error(Errc::config, path_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    T value{};
    seen_.insert(key);
    if (!node_.contains(key)) return;
    get(key, value);
    out = value;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  [[nodiscard]] std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(Errc::config, path_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* shape_name(AgentShape s) { return s == AgentShape::disk ? "disk" : "rect"; }

AgentShape parse_shape(const std::string& s, const std::string& where) {
  if (s == "rect") return AgentShape::rect;
  if (s == "disk") return AgentShape::disk;
  throw Error(Errc::config, where + ": unknown shape '" + s + "'");
}

const char* background_name(BackgroundSpec::Kind k) {
  switch (k) {
    case BackgroundSpec::Kind::noise: return "noise";
    case BackgroundSpec::Kind::gradient: return "gradient";
    default: return "constant";
  }
}

BackgroundSpec::Kind parse_background(const std::string& s, const std::string& where) {
  if (s == "constant") return BackgroundSpec::Kind::constant;
  if (s == "noise") return BackgroundSpec::Kind::noise;
  if (s == "gradient") return BackgroundSpec::Kind::gradient;
  throw Error(Errc::config, where + ": unknown background kind '" + s + "'");
}

SceneSpec scene_from(const json& node, const std::string& path) {
  SceneSpec s;
  Section sec(node, path);
  sec.get("id", s.id);
  sec.get("width", s.width);
  sec.get("height", s.height);
  sec.get("num_frames", s.num_frames);
  sec.get("seed", s.seed);
  if (const auto* bg = sec.child("background")) {
    Section b(*bg, sec.path("background"));
    std::string kind = background_name(s.background.kind);
    b.get("kind", kind);
    s.background.kind = parse_background(kind, sec.path("background"));
    b.get("level", s.background.level);
    b.get("amplitude", s.background.amplitude);
    b.get("seed", s.background.seed);
    b.finish();
  }
  if (const auto* agents = sec.child("agents")) {
    if (!agents->is_array()) throw Error(Errc::config, sec.path("agents") + ": expected an array");
    for (std::size_t i = 0; i < agents->size(); ++i) {
      const auto where = sec.path("agents") + "[" + std::to_string(i) + "]";
      Section a((*agents)[i], where);
      AgentSpec agent;
      std::string shape = shape_name(agent.shape);
      a.get("shape", shape);
      agent.shape = parse_shape(shape, where);
      a.get("width", agent.width);
      a.get("height", agent.height);
      a.get("speed", agent.speed);
      a.get("direction", agent.direction);
      a.get("x", agent.x);
      a.get("y", agent.y);
      a.get("intensity", agent.intensity);
      a.get("texture", agent.texture);
      a.get("visible", agent.visible);
      a.finish();
      s.agents.push_back(agent);
    }
  }
  if (const auto* anomalies = sec.child("anomalies")) {
    if (!anomalies->is_array()) throw Error(Errc::config, sec.path("anomalies") + ": expected an array");
    for (std::size_t i = 0; i < anomalies->size(); ++i) {
      Section a((*anomalies)[i], sec.path("anomalies") + "[" + std::to_string(i) + "]");
      AnomalySpec an;
      a.get("agent", an.agent);
      a.get("first_frame", an.first_frame);
      a.get("last_frame", an.last_frame);
      a.get("speed", an.speed);
      a.get("direction", an.direction);
      a.get("intensity", an.intensity);
      a.get("visible", an.visible);
      a.finish();
      s.anomalies.push_back(an);
    }
  }
  sec.finish();
  return s;
}

json scene_to(const SceneSpec& s) {
  json j;
  j["id"] = s.id;
  j["width"] = s.width;
  j["height"] = s.height;
  j["num_frames"] = s.num_frames;
  j["seed"] = s.seed;
  j["background"] = {{"kind", background_name(s.background.kind)},
                     {"level", s.background.level},
                     {"amplitude", s.background.amplitude},
                     {"seed", s.background.seed}};
  j["agents"] = json::array();
  for (const auto& a : s.agents) {
    j["agents"].push_back({{"shape", shape_name(a.shape)},
                           {"width", a.width},
                           {"height", a.height},
                           {"speed", a.speed},
                           {"direction", a.direction},
                           {"x", a.x},
                           {"y", a.y},
                           {"intensity", a.intensity},
                           {"texture", a.texture},
                           {"visible", a.visible}});
  }
  j["anomalies"] = json::array();
  for (const auto& a : s.anomalies) {
    json o = {{"agent", a.agent}, {"first_frame", a.first_frame}, {"last_frame", a.last_frame}};
    if (a.speed) o["speed"] = *a.speed;
    if (a.direction) o["direction"] = *a.direction;
    if (a.intensity) o["intensity"] = *a.intensity;
    if (a.visible) o["visible"] = *a.visible;
    j["anomalies"].push_back(o);
  }
  return j;
}

PipelineConfig config_from(const json& root) {
  PipelineConfig c;
  Section top(root, "config");
  top.get("seed", c.seed);
  top.get("jobs", c.jobs);
  top.get("output", c.output);

  if (const auto* n = top.child("data")) {
    Section s(*n, "data");
    s.get("train", c.data.train);
    s.get("test", c.data.test);
    s.get("ground_truth", c.data.ground_truth);
    std::string layout = c.data.layout == Layout::ucsd ? "ucsd" : "generic";
    s.get("layout", layout);
    c.data.layout = parse_layout(layout);
    s.finish();
  }
  if (const auto* n = top.child("preprocess")) {
    Section s(*n, "preprocess");
    s.get("tau_fg", c.tau_fg);
    s.finish();
  }
  if (const auto* n = top.child("patches")) {
    Section s(*n, "patches");
    s.get("patch_size", c.patches.patch_size);
    s.get("train_stride", c.patches.train_stride);
    s.get("test_stride", c.patches.test_stride);
    s.get("rho_min", c.patches.rho_min);
    s.finish();
  }
  if (const auto* n = top.child("optflow")) {
    Section s(*n, "optflow");
    s.get("poly_n", c.optflow.poly_n);
    s.get("poly_sigma", c.optflow.poly_sigma);
    s.get("pyramid_levels", c.optflow.pyramid_levels);
    s.get("pyramid_scale", c.optflow.pyramid_scale);
    s.get("window", c.optflow.window);
    s.get("iterations", c.optflow.iterations);
    s.finish();
  }
  if (const auto* n = top.child("motion")) {
    Section s(*n, "motion");
    s.get("hue_bins", c.motion.hue_bins);
    s.get("mag_bins", c.motion.mag_bins);
    s.get("mag_ceiling", c.motion.mag_ceiling);
    s.get("min_speed", c.motion.min_speed);
    s.get("tail_fraction", c.motion.tail_fraction);
    s.get("foreground_only", c.motion.foreground_only);
    s.finish();
  }
  if (const auto* n = top.child("network")) {
    Section s(*n, "network");
    s.get("extractor_weights", c.network.extractor_weights);
    if (const auto* g = s.child("generator")) {
      Section gs(*g, "network.generator");
      auto& spec = c.network.generator;
      gs.get("noise_dim", spec.noise_dim);
      gs.get("base_size", spec.base_size);
      gs.get("base_channels", spec.base_channels);
      gs.get("leaky_slope", spec.leaky_slope);
      if (const auto* stages = gs.child("stages")) {
        if (!stages->is_array()) throw Error(Errc::config, "network.generator.stages: expected an array");
        spec.stages.clear();
        for (std::size_t i = 0; i < stages->size(); ++i) {
          Section st((*stages)[i], "network.generator.stages[" + std::to_string(i) + "]");
          nn::ConvStage stage;
          st.get("channels", stage.channels);
          st.get("kernel", stage.kernel);
          st.get("upsample", stage.upsample);
          st.finish();
          spec.stages.push_back(stage);
        }
      }
      gs.finish();
    }
    if (const auto* d = s.child("discriminator")) {
      Section ds(*d, "network.discriminator");
      auto& spec = c.network.discriminator;
      ds.get("hidden", spec.hidden);
      ds.get("leaky_slope", spec.leaky_slope);
      if (const auto* e = ds.child("extractor")) {
        Section es(*e, "network.discriminator.extractor");
        es.get("input_size", spec.extractor.input_size);
        es.get("kernel", spec.extractor.kernel);
        es.get("blocks", spec.extractor.blocks);
        es.finish();
      }
      ds.finish();
    }
    s.finish();
  }
  if (const auto* n = top.child("train")) {
    Section s(*n, "train");
    s.get("iterations", c.train.iterations);
    s.get("batch_size", c.train.batch_size);
    s.get("learning_rate", c.train.learning_rate);
    s.get("beta1", c.train.beta1);
    s.get("beta2", c.train.beta2);
    std::string opt = c.train.optimizer == Optimizer::adam ? "adam" : "sgd";
    s.get("optimizer", opt);
    if (opt == "adam") {
      c.train.optimizer = Optimizer::adam;
    } else if (opt == "sgd") {
      c.train.optimizer = Optimizer::sgd;
    } else {
      throw Error(Errc::config, "train.optimizer: expected adam|sgd");
    }
    s.finish();
  }
  if (const auto* n = top.child("fusion")) {
    Section s(*n, "fusion");
    s.get("alpha", c.fusion.alpha);
    s.get("overlay_threshold", c.fusion.overlay_threshold);
    s.finish();
  }
  if (const auto* n = top.child("synth")) {
    Section s(*n, "synth");
    for (const char* split : {"train", "test"}) {
      if (const auto* list = s.child(split)) {
        if (!list->is_array()) throw Error(Errc::config, s.path(split) + ": expected an array");
        auto& out = std::string(split) == "train" ? c.synth.train : c.synth.test;
        for (std::size_t i = 0; i < list->size(); ++i) {
          out.push_back(scene_from((*list)[i], s.path(split) + "[" + std::to_string(i) + "]"));
        }
      }
    }
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

}  // namespace

void PipelineConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw Error(Errc::config, std::string(section) + ": " + e.what());
    }
  };
  if (jobs < 1) throw Error(Errc::config, "jobs must be >= 1");
  if (tau_fg < 0 || tau_fg > 255) throw Error(Errc::config, "preprocess.tau_fg must be in [0,255]");
  wrap("patches", [&] {
    patches.train_grid().validate();
    patches.test_grid().validate();
    if (patches.rho_min < 0.0 || patches.rho_min > 1.0) throw Error(Errc::config, "rho_min must be in [0,1]");
  });
  wrap("optflow", [&] { optflow.validate(); });
  wrap("motion", [&] { motion.validate(); });
  wrap("network", [&] {
    network.generator.validate(patches.patch_size);
    network.discriminator.validate(patches.patch_size);
  });
  wrap("train", [&] { train.validate(); });
  if (!(fusion.alpha >= 0.0 && fusion.alpha <= 1.0)) throw Error(Errc::config, "fusion.alpha must be in [0,1]");
  wrap("synth", [&] {
    for (const auto* list : {&synth.train, &synth.test}) {
      for (const auto& s : *list) aed::validate(s);
    }
  });
}

TrainConfig PipelineConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

PipelineConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::config, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from(root);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["output"] = c.output;
  j["data"] = {{"train", c.data.train},
               {"test", c.data.test},
               {"ground_truth", c.data.ground_truth},
               {"layout", c.data.layout == Layout::ucsd ? "ucsd" : "generic"}};
  j["preprocess"] = {{"tau_fg", c.tau_fg}};
  j["patches"] = {{"patch_size", c.patches.patch_size},
                  {"train_stride", c.patches.train_stride},
                  {"test_stride", c.patches.test_stride},
                  {"rho_min", c.patches.rho_min}};
  j["optflow"] = {{"poly_n", c.optflow.poly_n},
                  {"poly_sigma", c.optflow.poly_sigma},
                  {"pyramid_levels", c.optflow.pyramid_levels},
                  {"pyramid_scale", c.optflow.pyramid_scale},
                  {"window", c.optflow.window},
                  {"iterations", c.optflow.iterations}};
  j["motion"] = {{"hue_bins", c.motion.hue_bins},
                 {"mag_bins", c.motion.mag_bins},
                 {"mag_ceiling", c.motion.mag_ceiling},
                 {"min_speed", c.motion.min_speed},
                 {"tail_fraction", c.motion.tail_fraction},
                 {"foreground_only", c.motion.foreground_only}};
  json stages = json::array();
  for (const auto& st : c.network.generator.stages) {
    stages.push_back({{"channels", st.channels}, {"kernel", st.kernel}, {"upsample", st.upsample}});
  }
  const auto& d = c.network.discriminator;
  j["network"] = {{"extractor_weights", c.network.extractor_weights},
                  {"generator",
                   {{"noise_dim", c.network.generator.noise_dim},
                    {"base_size", c.network.generator.base_size},
                    {"base_channels", c.network.generator.base_channels},
                    {"leaky_slope", c.network.generator.leaky_slope},
                    {"stages", stages}}},
                  {"discriminator",
                   {{"hidden", d.hidden},
                    {"leaky_slope", d.leaky_slope},
                    {"extractor",
                     {{"input_size", d.extractor.input_size},
                      {"kernel", d.extractor.kernel},
                      {"blocks", d.extractor.blocks}}}}}};
  j["train"] = {{"iterations", c.train.iterations},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"optimizer", c.train.optimizer == Optimizer::adam ? "adam" : "sgd"}};
  j["fusion"] = {{"alpha", c.fusion.alpha}, {"overlay_threshold", c.fusion.overlay_threshold}};
  json synth;
  synth["train"] = json::array();
  synth["test"] = json::array();
  for (const auto& s : c.synth.train) synth["train"].push_back(scene_to(s));
  for (const auto& s : c.synth.test) synth["test"].push_back(scene_to(s));
  j["synth"] = synth;
  return j.dump(2);
}

SceneSpec parse_scene(const std::string& text) {
  try {
    return scene_from(json::parse(text), "scene");
  } catch (const json::exception& e) {
    throw Error(Errc::config, std::string("scene is not valid JSON: ") + e.what());
  }
}

std::string serialize_scene(const SceneSpec& scene) { return scene_to(scene).dump(2); }

}  // namespace aed
