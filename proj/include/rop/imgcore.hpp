#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rop {

/// Row-major 8-bit raster with `Channels` interleaved samples per pixel.
template <int Channels>
class Raster {
 public:
  static constexpr int kChannels = Channels;

  Raster() = default;
  Raster(int width, int height, std::uint8_t fill = 0);
  Raster(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t operator()(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }
  std::uint8_t& operator()(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * Channels + static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

using GrayImage = Raster<1>;
using RgbImage = Raster<3>;

extern template class Raster<1>;
extern template class Raster<3>;

/// Fractions of each dimension removed from the corresponding edge, each in [0, 0.05].
struct EdgeCrop {
  double top = 0.0;
  double bottom = 0.0;
  double left = 0.0;
  double right = 0.0;

  static constexpr double kMaxFraction = 0.05;
  bool operator==(const EdgeCrop&) const = default;
};

/// Pixel rectangle inside an image.
struct CropBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  bool operator==(const CropBox&) const = default;
};

/// Region kept by crop_edges. Throws std::invalid_argument on bad fractions or an empty result.
CropBox edge_crop_box(int width, int height, const EdgeCrop& crop);

/// Window magnified by center_zoom. Throws std::invalid_argument if factor < 1.
CropBox zoom_box(int width, int height, double factor);

/// Half-up rounding of a non-negative real, clamped to [0, 255].
std::uint8_t quantize(double value) noexcept;

/// I = 0.3 R + 0.59 G + 0.11 B, rounded half-up (evaluated exactly in integers).
GrayImage to_grayscale(const RgbImage& img);

/// Bilinear resampling with half-pixel centers (align-corners off).
GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height);

/// Region [x, x+w) x [y, y+h), copied verbatim.
GrayImage crop_region(const GrayImage& img, int x, int y, int w, int h);

/// Removes floor(fraction * dimension) pixels from each edge.
GrayImage crop_edges(const GrayImage& img, const EdgeCrop& crop);

/// Takes the centered (w/factor) x (h/factor) window and scales it back to w x h.
GrayImage center_zoom(const GrayImage& img, double factor);

}  // namespace rop
