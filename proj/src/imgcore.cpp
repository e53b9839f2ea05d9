#include "rop/imgcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rop/error.hpp"

namespace rop {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("raster dimensions must be positive, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
  if (static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height) >
      static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max())) {
    throw std::invalid_argument("raster too large");
  }
}

// Guards floor() against products such as 0.03 * 100 = 2.9999999999999996.
int floor_pixels(double fraction, int dimension) {
  return static_cast<int>(std::floor(fraction * dimension + 1e-9));
}

}  // namespace

template <int Channels>
Raster<Channels>::Raster(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(pixel_count() * Channels, fill);
}

template <int Channels>
Raster<Channels>::Raster(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != pixel_count() * Channels) {
    throw DimensionMismatch("raster data has " + std::to_string(data_.size()) +
                            " samples, expected " + std::to_string(pixel_count() * Channels));
  }
}

template class Raster<1>;
template class Raster<3>;

std::uint8_t quantize(double value) noexcept {
  if (!(value > 0.0)) return 0;
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(value + 0.5));
}

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const unsigned weighted = 30u * src[3 * i] + 59u * src[3 * i + 1] + 11u * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>(std::min(255u, (weighted + 50u) / 100u));
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) {
    throw std::invalid_argument("resize target must be at least 1x1");
  }
  if (out_width == img.width() && out_height == img.height()) return img;

  // Source positions are ((2i + 1) in - out) / (2 out): exact rationals, so the
  // weights are integers over 2 out and the result is rounded exactly.
  struct Tap {
    int lo, hi;
    std::int64_t frac;  ///< numerator over 2 * out
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const std::int64_t den = 2 * static_cast<std::int64_t>(out);
    for (int i = 0; i < out; ++i) {
      std::int64_t num = (2 * static_cast<std::int64_t>(i) + 1) * in - out;
      num = std::clamp<std::int64_t>(num, 0, den * (in - 1));
      const int lo = static_cast<int>(num / den);
      t[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, in - 1), num - lo * den};
    }
    return t;
  };
  const auto xs = taps(img.width(), out_width);
  const auto ys = taps(img.height(), out_height);
  const std::int64_t dx = 2 * static_cast<std::int64_t>(out_width);
  const std::int64_t dy = 2 * static_cast<std::int64_t>(out_height);
  const std::int64_t den = dx * dy;

  GrayImage out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      const std::int64_t top = img(tx.lo, ty.lo) * (dx - tx.frac) + img(tx.hi, ty.lo) * tx.frac;
      const std::int64_t bot = img(tx.lo, ty.hi) * (dx - tx.frac) + img(tx.hi, ty.hi) * tx.frac;
      const std::int64_t num = top * (dy - ty.frac) + bot * ty.frac;
      out(x, y) = static_cast<std::uint8_t>((2 * num + den) / (2 * den));
    }
  }
  return out;
}

GrayImage crop_region(const GrayImage& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width() || y + h > img.height()) {
    throw std::invalid_argument("crop region outside image");
  }
  GrayImage out(w, h);
  for (int row = 0; row < h; ++row) {
    auto src = img.data().subspan(
        static_cast<std::size_t>(y + row) * static_cast<std::size_t>(img.width()) +
            static_cast<std::size_t>(x),
        static_cast<std::size_t>(w));
    std::copy(src.begin(), src.end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(row) * w);
  }
  return out;
}

CropBox edge_crop_box(int width, int height, const EdgeCrop& crop) {
  for (double f : {crop.top, crop.bottom, crop.left, crop.right}) {
    if (!(f >= 0.0 && f <= EdgeCrop::kMaxFraction)) {
      throw std::invalid_argument("edge crop fraction outside [0, 0.05]");
    }
  }
  const int top = floor_pixels(crop.top, height);
  const int bottom = floor_pixels(crop.bottom, height);
  const int left = floor_pixels(crop.left, width);
  const int right = floor_pixels(crop.right, width);
  const CropBox box{left, top, width - left - right, height - top - bottom};
  if (box.width < 1 || box.height < 1) throw std::invalid_argument("edge crop leaves an empty image");
  return box;
}

CropBox zoom_box(int width, int height, double factor) {
  if (!(factor >= 1.0)) throw std::invalid_argument("zoom factor must be >= 1.0");
  const int w = std::max(1, static_cast<int>(std::floor(width / factor)));
  const int h = std::max(1, static_cast<int>(std::floor(height / factor)));
  return {(width - w) / 2, (height - h) / 2, w, h};
}

GrayImage crop_edges(const GrayImage& img, const EdgeCrop& crop) {
  const CropBox b = edge_crop_box(img.width(), img.height(), crop);
  return crop_region(img, b.x, b.y, b.width, b.height);
}

GrayImage center_zoom(const GrayImage& img, double factor) {
  const CropBox b = zoom_box(img.width(), img.height(), factor);
  return resize_bilinear(crop_region(img, b.x, b.y, b.width, b.height), img.width(), img.height());
}

}  // namespace rop
