// aed: synthesize data, train, detect, evaluate and report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aed/pipeline.hpp"

namespace fs = std::filesystem;
using namespace aed;

namespace {

int exit_code(Errc code) {
  switch (code) {
    case Errc::config:
    case Errc::invalid_argument:
      return 1;
    case Errc::non_finite:
      return 3;
    default:
      return 2;
  }
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "global seed (overrides the config)");
  cmd->add_option("--jobs", c.jobs, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

PipelineConfig resolve(const Common& c, std::optional<PipelineConfig> base = std::nullopt) {
  PipelineConfig cfg = c.config.empty() ? (base ? *base : PipelineConfig{}) : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  cfg.validate();
  return cfg;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abnormal event detection in video"};
  app.require_subcommand(1);

  Common synth_opts, train_opts, detect_opts;
  std::string synth_out, train_data, model_dir, test_data, results_dir, eval_results, gt_root, eval_out, mode = "both",
                                                                                                      report_dir;
  bool dump = false, overlay = false;

  auto* synth = app.add_subcommand("synth", "write synthetic train/test clips with ground truth");
  add_common(synth, synth_opts);
  synth->add_option("--out", synth_out, "output directory (default: config output)");

  auto* train_cmd = app.add_subcommand("train", "fit background, motion model and networks");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--data", train_data, "training clips root (default: data.train)");
  train_cmd->add_option("--model", model_dir, "model directory (default: <output>/model)");

  auto* detect = app.add_subcommand("detect", "score every frame of the test clips");
  add_common(detect, detect_opts);
  detect->add_option("--model", model_dir, "model directory")->required();
  detect->add_option("--data", test_data, "test clips root (default: data.test)");
  detect->add_option("--out", results_dir, "results directory (default: <output>/results)");
  detect->add_flag("--dump-intermediates", dump, "write equalized, foreground, edge, flow and motion images");
  detect->add_flag("--overlay", overlay, "write frames with the detected region highlighted");

  auto* eval = app.add_subcommand("eval", "frame- and pixel-level ROC against ground truth");
  eval->add_option("--results", eval_results, "results directory")->required();
  eval->add_option("--gt", gt_root, "ground-truth root (<clip>_gt masks or a .m range file)")->required();
  eval->add_option("--mode", mode, "frame|pixel|both")->check(CLI::IsMember({"frame", "pixel", "both"}));
  eval->add_option("--out", eval_out, "report directory (default: the results directory)");

  auto* report = app.add_subcommand("report", "print metrics and the stage timing table");
  report->add_option("--results", report_dir, "results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = resolve(synth_opts);
      const fs::path out = synth_out.empty() ? fs::path(cfg.output) / "data" : fs::path(synth_out);
      run_synth(out, cfg);
      std::cout << "wrote " << cfg.synth.train.size() << " train and " << cfg.synth.test.size() << " test clips to "
                << out.string() << '\n';
    } else if (train_cmd->parsed()) {
      auto cfg = resolve(train_opts);
      if (!train_data.empty()) cfg.data.train = train_data;
      if (cfg.data.train.empty()) throw Error(Errc::config, "no training data (use --data or data.train)");
      const auto clips = load_clips(cfg.data.train, cfg.data.layout);
      const auto model = train_model(clips, cfg, log_line);
      const fs::path dir = model_dir.empty() ? fs::path(cfg.output) / "model" : fs::path(model_dir);
      save_model(dir, model);
      std::cout << "model written to " << dir.string() << '\n';
    } else if (detect->parsed()) {
      const auto model = load_model(model_dir);
      auto cfg = resolve(detect_opts, model.config);
      check_compatible(cfg, model);
      if (!test_data.empty()) cfg.data.test = test_data;
      if (cfg.data.test.empty()) throw Error(Errc::config, "no test data (use --data or data.test)");
      const auto clips = load_clips(cfg.data.test, cfg.data.layout);
      std::vector<ClipResult> results;
      DetectOptions opts{cfg.jobs, dump};
      for (const auto& clip : clips) {
        results.push_back(detect_clip(clip, model, cfg, opts));
        log_line("detected " + clip.id + " (" + std::to_string(clip.length()) + " frames)");
      }
      const fs::path out = results_dir.empty() ? fs::path(cfg.output) / "results" : fs::path(results_dir);
      write_results(out, results, clips, cfg.fusion.overlay_threshold, overlay);
      std::cout << "results written to " << out.string() << '\n';
    } else if (eval->parsed()) {
      const fs::path out = eval_out.empty() ? fs::path(eval_results) : fs::path(eval_out);
      const auto summary = run_eval(eval_results, gt_root, parse_eval_mode(mode), out);
      std::cout << format_summary(summary);
    } else if (report->parsed()) {
      std::cout << run_report(report_dir);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
