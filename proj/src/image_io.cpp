#include "aed/image_io.hpp"

#include <algorithm>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace aed {

std::optional<Gray8> read_gray(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYCOLOR | cv::IMREAD_ANYDEPTH);
  if (raw.empty()) return std::nullopt;

  if (raw.depth() != CV_8U) {
    double scale = raw.depth() == CV_16U ? 1.0 / 257.0 : 1.0;
    raw.convertTo(raw, CV_8U, scale);
  }
  cv::Mat gray;
  switch (raw.channels()) {
    case 1: gray = raw; break;
    case 3: cv::cvtColor(raw, gray, cv::COLOR_BGR2GRAY); break;
    case 4: cv::cvtColor(raw, gray, cv::COLOR_BGRA2GRAY); break;
    default: return std::nullopt;
  }

  Gray8 out(gray.cols, gray.rows);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* src = gray.ptr<std::uint8_t>(y);
    std::copy(src, src + gray.cols, out.row(y).begin());
  }
  return out;
}

void write_gray(const std::filesystem::path& path, const Gray8& image) {
  cv::Mat mat(image.height(), image.width(), CV_8UC1, const_cast<std::uint8_t*>(image.data()));
  if (!cv::imwrite(path.string(), mat)) throw Error(Errc::io, "cannot write image " + path.string());
}

void write_rgb(const std::filesystem::path& path, Size size, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != size.area() * 3) throw Error(Errc::invalid_argument, "rgb buffer size mismatch");
  cv::Mat mat(size.height, size.width, CV_8UC3, const_cast<std::uint8_t*>(rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(mat, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw Error(Errc::io, "cannot write image " + path.string());
}

}  // namespace aed
