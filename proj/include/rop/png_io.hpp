#pragma once

#include <filesystem>
#include <variant>

#include "rop/imgcore.hpp"

namespace rop::png {

using Image = std::variant<GrayImage, RgbImage>;

/// Decodes any PNG; palette, alpha and 16-bit inputs are reduced to 8-bit
/// gray or RGB. Throws IoError.
Image read(const std::filesystem::path& path);

/// Gray view of any PNG: RGB files go through to_grayscale.
GrayImage read_gray(const std::filesystem::path& path);

struct Size {
  int width = 0;
  int height = 0;
};

/// Header-only read.
Size read_size(const std::filesystem::path& path);

void write(const std::filesystem::path& path, const GrayImage& img);
void write(const std::filesystem::path& path, const RgbImage& img);

}  // namespace rop::png
