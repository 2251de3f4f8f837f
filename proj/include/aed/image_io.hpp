#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "aed/image.hpp"

namespace aed {

/// Decodes an image file to 8-bit gray (color inputs via standard luminance).
/// Returns nullopt when the file is not a decodable image.
std::optional<Gray8> read_gray(const std::filesystem::path& path);

void write_gray(const std::filesystem::path& path, const Gray8& image);

/// Writes interleaved 8-bit RGB pixels.
void write_rgb(const std::filesystem::path& path, Size size, std::span<const std::uint8_t> rgb);

}  // namespace aed
