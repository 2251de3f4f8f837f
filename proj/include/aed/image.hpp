#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aed/error.hpp"

namespace aed {

struct Size {
  int width = 0;
  int height = 0;

  [[nodiscard]] std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const Size&, const Size&) = default;
};

/// Dense row-major single-channel image.
template <class T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{}) : size_{width, height}, data_(Size{width, height}.area(), fill) {}
  explicit Image(Size size, T fill = T{}) : Image(size.width, size.height, fill) {}

  [[nodiscard]] int width() const { return size_.width; }
  [[nodiscard]] int height() const { return size_.height; }
  [[nodiscard]] Size size() const { return size_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] std::size_t pixel_count() const { return data_.size(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Clamped-edge access.
  [[nodiscard]] const T& at_clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= size_.width ? size_.width - 1 : x);
    y = y < 0 ? 0 : (y >= size_.height ? size_.height - 1 : y);
    return data_[index(x, y)];
  }

  std::span<T> row(int y) { return {data_.data() + index(0, y), static_cast<std::size_t>(size_.width)}; }
  std::span<const T> row(int y) const { return {data_.data() + index(0, y), static_cast<std::size_t>(size_.width)}; }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) + static_cast<std::size_t>(x);
  }

  Size size_{};
  std::vector<T> data_;
};

using Gray8 = Image<std::uint8_t>;
using FloatImage = Image<float>;
/// Binary mask stored as 0/1 bytes.
using Mask = Image<std::uint8_t>;

inline void require_same_size(Size a, Size b, const std::string& what) {
  if (!(a == b)) {
    throw Error(Errc::geometry_mismatch, what + ": " + std::to_string(a.width) + "x" +
                                             std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                             std::to_string(b.height));
  }
}

inline std::size_t count_set(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.pixels()) n += v != 0;
  return n;
}

}  // namespace aed
