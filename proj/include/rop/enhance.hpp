#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rop/imgcore.hpp"

namespace rop {

struct Histogram256 {
  std::array<std::uint64_t, 256> bins{};

  std::uint64_t total() const noexcept;
  bool operator==(const Histogram256&) const = default;
};

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  double clip_limit = 2.0;  ///< multiples of the uniform bin height
};

struct StandardizedImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;
};

using Lut = std::array<std::uint8_t, 256>;

Histogram256 histogram(const GrayImage& img);

/// Equalization lookup from a histogram: round(255 (C(v) - Cmin) / (N - Cmin))
/// with the inclusive cumulative C and Cmin its first nonzero value.
/// A histogram concentrated in one bin yields the identity.
Lut equalization_lut(const Histogram256& hist);

GrayImage equalize(const GrayImage& img);

/// Clips every bin at `limit` and spreads the excess evenly over all 256
/// bins; the excess % 256 leftover goes one count per bin from bin 0 up.
/// Preserves total().
Histogram256 clip_histogram(const Histogram256& hist, std::uint64_t limit);

/// Integer clip level used by clahe for a tile of `tile_pixels` pixels.
std::uint64_t clahe_clip_level(double clip_limit, std::uint64_t tile_pixels);

/// Start offsets of `tiles` tiles covering `extent` pixels; the last tile
/// absorbs the remainder. Has tiles + 1 entries, the last being `extent`.
std::vector<int> tile_bounds(int extent, int tiles);

GrayImage clahe(const GrayImage& img, const ClaheParams& params = {});

/// (v - mean) / std with the population standard deviation; all zeros when std == 0.
StandardizedImage standardize(const GrayImage& img);

}  // namespace rop
