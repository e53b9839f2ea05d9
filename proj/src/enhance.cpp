#include "rop/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rop {

std::uint64_t Histogram256::total() const noexcept {
  return std::accumulate(bins.begin(), bins.end(), std::uint64_t{0});
}

Histogram256 histogram(const GrayImage& img) {
  Histogram256 h;
  for (std::uint8_t v : img.data()) ++h.bins[v];
  return h;
}

Lut equalization_lut(const Histogram256& hist) {
  Lut lut;
  std::iota(lut.begin(), lut.end(), std::uint8_t{0});

  std::array<std::uint64_t, 256> cdf{};
  std::partial_sum(hist.bins.begin(), hist.bins.end(), cdf.begin());
  const std::uint64_t n = cdf.back();
  const auto first = std::find_if(cdf.begin(), cdf.end(), [](std::uint64_t c) { return c > 0; });
  if (first == cdf.end()) return lut;
  const std::uint64_t cmin = *first;
  if (cmin == n) return lut;

  const std::uint64_t span = n - cmin;
  for (std::size_t v = 0; v < 256; ++v) {
    if (cdf[v] < cmin) {
      lut[v] = 0;
      continue;
    }
    // round-half-up of 255 * (c - cmin) / span
    lut[v] = static_cast<std::uint8_t>((2 * 255 * (cdf[v] - cmin) + span) / (2 * span));
  }
  return lut;
}

GrayImage equalize(const GrayImage& img) {
  const Lut lut = equalization_lut(histogram(img));
  GrayImage out = img;
  for (std::uint8_t& v : out.data()) v = lut[v];
  return out;
}

Histogram256 clip_histogram(const Histogram256& hist, std::uint64_t limit) {
  Histogram256 out;
  std::uint64_t excess = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    if (hist.bins[i] > limit) {
      excess += hist.bins[i] - limit;
      out.bins[i] = limit;
    } else {
      out.bins[i] = hist.bins[i];
    }
  }
  const std::uint64_t share = excess / 256;
  const std::uint64_t leftover = excess % 256;
  for (std::size_t i = 0; i < 256; ++i) out.bins[i] += share + (i < leftover ? 1 : 0);
  return out;
}

std::uint64_t clahe_clip_level(double clip_limit, std::uint64_t tile_pixels) {
  const double level = std::floor(clip_limit * static_cast<double>(tile_pixels) / 256.0);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(level));
}

std::vector<int> tile_bounds(int extent, int tiles) {
  std::vector<int> bounds(static_cast<std::size_t>(tiles) + 1);
  const int step = extent / tiles;
  for (int i = 0; i < tiles; ++i) bounds[static_cast<std::size_t>(i)] = i * step;
  bounds.back() = extent;
  return bounds;
}

namespace {

// Interpolation weights along one axis, in units of half pixels so that
// tile centers (start + end - 1) / 2 stay integral.
struct AxisWeight {
  int lo_tile;
  int hi_tile;
  std::int64_t lo_weight;
  std::int64_t hi_weight;  // lo_weight + hi_weight is the denominator
};

std::vector<AxisWeight> axis_weights(const std::vector<int>& bounds, int extent) {
  const int tiles = static_cast<int>(bounds.size()) - 1;
  std::vector<std::int64_t> centers2(static_cast<std::size_t>(tiles));
  for (int t = 0; t < tiles; ++t) {
    centers2[static_cast<std::size_t>(t)] =
        bounds[static_cast<std::size_t>(t)] + bounds[static_cast<std::size_t>(t) + 1] - 1;
  }
  std::vector<AxisWeight> out(static_cast<std::size_t>(extent));
  int t = 0;
  for (int p = 0; p < extent; ++p) {
    const std::int64_t p2 = 2 * static_cast<std::int64_t>(p);
    if (p2 <= centers2.front()) {
      out[static_cast<std::size_t>(p)] = {0, 0, 1, 0};
    } else if (p2 >= centers2.back()) {
      out[static_cast<std::size_t>(p)] = {tiles - 1, tiles - 1, 1, 0};
    } else {
      while (centers2[static_cast<std::size_t>(t) + 1] <= p2) ++t;
      const std::int64_t den = centers2[static_cast<std::size_t>(t) + 1] - centers2[static_cast<std::size_t>(t)];
      const std::int64_t hi = p2 - centers2[static_cast<std::size_t>(t)];
      out[static_cast<std::size_t>(p)] = {t, t + 1, den - hi, hi};
    }
  }
  return out;
}

}  // namespace

GrayImage clahe(const GrayImage& img, const ClaheParams& params) {
  if (params.tiles_x < 1 || params.tiles_y < 1) {
    throw std::invalid_argument("CLAHE tile grid must be at least 1x1");
  }
  if (!(params.clip_limit > 0.0)) throw std::invalid_argument("CLAHE clip limit must be positive");
  if (params.tiles_x > img.width() || params.tiles_y > img.height()) {
    throw std::invalid_argument("CLAHE tile grid is finer than the image");
  }

  const auto xb = tile_bounds(img.width(), params.tiles_x);
  const auto yb = tile_bounds(img.height(), params.tiles_y);

  std::vector<Lut> luts(static_cast<std::size_t>(params.tiles_x) * params.tiles_y);
  for (int ty = 0; ty < params.tiles_y; ++ty) {
    for (int tx = 0; tx < params.tiles_x; ++tx) {
      Histogram256 h;
      for (int y = yb[ty]; y < yb[ty + 1]; ++y) {
        for (int x = xb[tx]; x < xb[tx + 1]; ++x) ++h.bins[img(x, y)];
      }
      const std::uint64_t n = h.total();
      Lut& lut = luts[static_cast<std::size_t>(ty) * params.tiles_x + tx];
      if (std::count_if(h.bins.begin(), h.bins.end(), [](auto c) { return c > 0; }) == 1) {
        std::iota(lut.begin(), lut.end(), std::uint8_t{0});
      } else {
        lut = equalization_lut(clip_histogram(h, clahe_clip_level(params.clip_limit, n)));
      }
    }
  }

  const auto wx = axis_weights(xb, img.width());
  const auto wy = axis_weights(yb, img.height());
  auto lut_at = [&](int tx, int ty) -> const Lut& {
    return luts[static_cast<std::size_t>(ty) * params.tiles_x + tx];
  };

  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    const AxisWeight& ay = wy[static_cast<std::size_t>(y)];
    const std::int64_t den_y = ay.lo_weight + ay.hi_weight;
    for (int x = 0; x < img.width(); ++x) {
      const AxisWeight& ax = wx[static_cast<std::size_t>(x)];
      const std::int64_t den_x = ax.lo_weight + ax.hi_weight;
      const std::uint8_t v = img(x, y);
      const std::int64_t top = ax.lo_weight * lut_at(ax.lo_tile, ay.lo_tile)[v] +
                               ax.hi_weight * lut_at(ax.hi_tile, ay.lo_tile)[v];
      const std::int64_t bot = ax.lo_weight * lut_at(ax.lo_tile, ay.hi_tile)[v] +
                               ax.hi_weight * lut_at(ax.hi_tile, ay.hi_tile)[v];
      const std::int64_t num = ay.lo_weight * top + ay.hi_weight * bot;
      const std::int64_t den = den_x * den_y;
      out(x, y) = static_cast<std::uint8_t>((2 * num + den) / (2 * den));
    }
  }
  return out;
}

StandardizedImage standardize(const GrayImage& img) {
  StandardizedImage out{img.width(), img.height(), std::vector<double>(img.pixel_count(), 0.0)};
  const auto px = img.data();
  const double n = static_cast<double>(px.size());
  std::uint64_t sum = 0;
  for (std::uint8_t v : px) sum += v;
  const double mean = static_cast<double>(sum) / n;
  double ss = 0.0;
  for (std::uint8_t v : px) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < px.size(); ++i) out.data[i] = (px[i] - mean) / sd;
  return out;
}

}  // namespace rop
