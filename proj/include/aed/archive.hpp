#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "aed/nn/tensor.hpp"

namespace aed {

/// Named-tensor container, little-endian throughout:
///   magic "AEDT" | version u8 (=1) | entry count u32
///   per entry: name length u32 | UTF-8 name | rank u32 | rank x dim u32 | float32 values, row-major
struct TensorArchive {
  static constexpr char kMagic[4] = {'A', 'E', 'D', 'T'};
  static constexpr std::uint8_t kVersion = 1;

  std::vector<std::pair<std::string, nn::Tensor>> entries;

  [[nodiscard]] const nn::Tensor* find(const std::string& name) const;

  [[nodiscard]] std::string serialize() const;
  static TensorArchive parse(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);
};

}  // namespace aed
