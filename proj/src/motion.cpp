#include "aed/motion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace aed {

void MotionParams::validate() const {
  if (hue_bins < 1 || mag_bins < 1) throw Error(Errc::invalid_argument, "histogram bin counts must be >= 1");
  if (!(mag_ceiling > 0.0)) throw Error(Errc::invalid_argument, "mag_ceiling must be positive");
  if (min_speed < 0.0) throw Error(Errc::invalid_argument, "min_speed must be >= 0");
  if (tail_fraction < 0.0 || tail_fraction > 1.0) throw Error(Errc::invalid_argument, "tail_fraction must be in [0,1]");
}

int MotionHistogram::hue_bin(double hue) const {
  const int n = static_cast<int>(hue_bins.size());
  const int b = static_cast<int>(std::floor(hue / (2.0 * std::numbers::pi) * n));
  return std::clamp(b, 0, n - 1);
}

int MotionHistogram::mag_bin(double magnitude) const {
  const int n = static_cast<int>(mag_bins.size());
  const int b = static_cast<int>(std::floor(magnitude / mag_ceiling * n));
  return std::clamp(b, 0, n - 1);
}

void MotionHistogram::merge(const MotionHistogram& other) {
  if (other.hue_bins.size() != hue_bins.size() || other.mag_bins.size() != mag_bins.size() ||
      other.mag_ceiling != mag_ceiling) {
    throw Error(Errc::shape_mismatch, "cannot merge histograms with different bin layouts");
  }
  for (std::size_t i = 0; i < hue_bins.size(); ++i) hue_bins[i] += other.hue_bins[i];
  for (std::size_t i = 0; i < mag_bins.size(); ++i) mag_bins[i] += other.mag_bins[i];
  total += other.total;
}

void accumulate(MotionHistogram& hist, const FlowPolar& flow, double min_speed, const Mask* only) {
  if (only) require_same_size(only->size(), flow.size(), "motion gate");
  auto hue = flow.hue.pixels();
  auto mag = flow.magnitude.pixels();
  for (std::size_t i = 0; i < hue.size(); ++i) {
    if (mag[i] < min_speed || (only && !only->pixels()[i])) continue;
    ++hist.hue_bins[static_cast<std::size_t>(hist.hue_bin(hue[i]))];
    ++hist.mag_bins[static_cast<std::size_t>(hist.mag_bin(mag[i]))];
    ++hist.total;
  }
}

MotionHistogram fit(std::span<const FlowPolar> flows, int hue_bins, int mag_bins, double mag_ceiling, double min_speed) {
  if (flows.empty()) throw Error(Errc::empty_input, "motion histogram needs at least one flow field");
  MotionParams{hue_bins, mag_bins, mag_ceiling, min_speed, 0.05, true}.validate();
  MotionHistogram hist;
  hist.hue_bins.assign(static_cast<std::size_t>(hue_bins), 0);
  hist.mag_bins.assign(static_cast<std::size_t>(mag_bins), 0);
  hist.mag_ceiling = mag_ceiling;
  for (const auto& f : flows) accumulate(hist, f, min_speed);
  return hist;
}

std::vector<int> tail_bins(std::span<const std::uint64_t> counts, std::uint64_t total, double tail_fraction) {
  std::vector<int> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return counts[a] < counts[b]; });

  // Relative slack so that e.g. 5 of 100 observations counts as exactly 5%.
  const double budget = tail_fraction * static_cast<double>(total) * (1.0 + 1e-12);
  std::vector<int> chosen;
  std::uint64_t mass = 0;
  for (int b : order) {
    if (static_cast<double>(mass + counts[b]) > budget) break;
    mass += counts[b];
    chosen.push_back(b);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

AbnormalValueSet tail(const MotionHistogram& hist, double tail_fraction) {
  if (hist.total == 0) throw Error(Errc::empty_input, "histogram has no observations");
  if (tail_fraction < 0.0 || tail_fraction > 1.0) throw Error(Errc::invalid_argument, "tail_fraction must be in [0,1]");
  return {tail_bins(hist.hue_bins, hist.total, tail_fraction), tail_bins(hist.mag_bins, hist.total, tail_fraction),
          tail_fraction};
}

MotionMask mask(const FlowPolar& flow, const AbnormalValueSet& sets, const MotionHistogram& hist, double min_speed) {
  const auto out_of_range = [](const std::vector<int>& bins, std::size_t n) {
    return std::any_of(bins.begin(), bins.end(), [n](int b) { return b < 0 || static_cast<std::size_t>(b) >= n; });
  };
  if (hist.hue_bins.empty() || hist.mag_bins.empty() || out_of_range(sets.hue_abnormal, hist.hue_bins.size()) ||
      out_of_range(sets.mag_abnormal, hist.mag_bins.size())) {
    throw Error(Errc::shape_mismatch, "abnormal sets do not match the histogram bin layout");
  }
  std::vector<std::uint8_t> hue_flag(hist.hue_bins.size(), 0), mag_flag(hist.mag_bins.size(), 0);
  for (int b : sets.hue_abnormal) hue_flag[static_cast<std::size_t>(b)] = 1;
  for (int b : sets.mag_abnormal) mag_flag[static_cast<std::size_t>(b)] = 1;

  MotionMask out(flow.size());
  auto hue = flow.hue.pixels();
  auto mag = flow.magnitude.pixels();
  auto bits = out.pixels();
  for (std::size_t i = 0; i < hue.size(); ++i) {
    if (mag[i] < min_speed) continue;
    bits[i] = (hue_flag[static_cast<std::size_t>(hist.hue_bin(hue[i]))] ||
               mag_flag[static_cast<std::size_t>(hist.mag_bin(mag[i]))])
                  ? 1
                  : 0;
  }
  return out;
}

std::string MotionModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "aed-motion-model";
  j["version"] = kVersion;
  j["params"] = {{"hue_bins", params.hue_bins},
                 {"mag_bins", params.mag_bins},
                 {"mag_ceiling", params.mag_ceiling},
                 {"min_speed", params.min_speed},
                 {"tail_fraction", params.tail_fraction},
                 {"foreground_only", params.foreground_only}};
  j["histogram"] = {{"hue", histogram.hue_bins},
                    {"magnitude", histogram.mag_bins},
                    {"mag_ceiling", histogram.mag_ceiling},
                    {"total", histogram.total}};
  j["abnormal"] = {{"hue", abnormal.hue_abnormal},
                   {"magnitude", abnormal.mag_abnormal},
                   {"tail_fraction", abnormal.tail_fraction}};
  return j.dump(2);
}

MotionModel MotionModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "aed-motion-model") throw Error(Errc::config, "not a motion model document");
    if (j.at("version").get<int>() != kVersion) throw Error(Errc::config, "unsupported motion model version");
    MotionModel m;
    const auto& p = j.at("params");
    m.params = {p.at("hue_bins").get<int>(), p.at("mag_bins").get<int>(), p.at("mag_ceiling").get<double>(),
                p.at("min_speed").get<double>(), p.at("tail_fraction").get<double>(),
                p.value("foreground_only", true)};
    m.params.validate();
    const auto& h = j.at("histogram");
    m.histogram.hue_bins = h.at("hue").get<std::vector<std::uint64_t>>();
    m.histogram.mag_bins = h.at("magnitude").get<std::vector<std::uint64_t>>();
    m.histogram.mag_ceiling = h.at("mag_ceiling").get<double>();
    m.histogram.total = h.at("total").get<std::uint64_t>();
    const auto& a = j.at("abnormal");
    m.abnormal.hue_abnormal = a.at("hue").get<std::vector<int>>();
    m.abnormal.mag_abnormal = a.at("magnitude").get<std::vector<int>>();
    m.abnormal.tail_fraction = a.at("tail_fraction").get<double>();
    if (m.histogram.hue_bins.size() != static_cast<std::size_t>(m.params.hue_bins) ||
        m.histogram.mag_bins.size() != static_cast<std::size_t>(m.params.mag_bins)) {
      throw Error(Errc::config, "motion model bin counts disagree with its parameters");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config, std::string("malformed motion model: ") + e.what());
  }
}

void MotionModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << to_json() << '\n';
}

MotionModel MotionModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace aed
