#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "rop/error.hpp"
#include "rop/pipeline.hpp"
#include "rop/png_io.hpp"
#include "rop/rng.hpp"

namespace rop {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Ridge {
  double x0, x1, y0, xm, curvature, thickness;
  double y_at(double x) const { return y0 + curvature * (x - xm) * (x - xm); }
};

Ridge random_ridge(SplitMix64& rng, int w, int h, double band_lo, double band_hi, double thickness) {
  Ridge r{};
  r.x0 = rng.uniform(0.15, 0.30) * w;
  r.x1 = rng.uniform(0.70, 0.85) * w;
  r.y0 = rng.uniform(band_lo, band_hi) * h;
  r.xm = 0.5 * (r.x0 + r.x1);
  r.curvature = rng.uniform(-0.6, 0.6) / w;
  r.thickness = thickness;
  return r;
}

void paint(RgbImage& img, const Ridge& r, SplitMix64& rng) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (x + 0.5 < r.x0 || x + 0.5 > r.x1) continue;
      const double d = std::abs(y + 0.5 - r.y_at(x + 0.5));
      if (d > r.thickness) continue;
      const int boost = 60 + static_cast<int>(rng.below(30));
      for (int c = 0; c < 3; ++c) img(x, y, c) = static_cast<std::uint8_t>(std::min(255, img(x, y, c) + boost));
    }
  }
}

ordered_json region_for(const Ridge& r, int w, int h, int stage, const std::string& stage_key) {
  constexpr int kSamples = 6;
  const double margin = r.thickness + 3.0;
  ordered_json xs = ordered_json::array();
  ordered_json ys = ordered_json::array();
  auto push = [&](double x, double y) {
    xs.push_back(static_cast<int>(std::lround(std::clamp(x, 0.0, static_cast<double>(w)))));
    ys.push_back(static_cast<int>(std::lround(std::clamp(y, 0.0, static_cast<double>(h)))));
  };
  for (int i = 0; i <= kSamples; ++i) {
    const double x = r.x0 - 2.0 + (r.x1 - r.x0 + 4.0) * i / kSamples;
    push(x, r.y_at(x) - margin);
  }
  for (int i = kSamples; i >= 0; --i) {
    const double x = r.x0 - 2.0 + (r.x1 - r.x0 + 4.0) * i / kSamples;
    push(x, r.y_at(x) + margin);
  }
  return {{"shape_attributes", {{"name", "polygon"}, {"all_points_x", xs}, {"all_points_y", ys}}},
          {"region_attributes", {{stage_key, std::to_string(stage)}}}};
}

}  // namespace

int generate_fixtures(const fs::path& dir, const FixtureOptions& opts) {
  if (opts.per_stage < 1 || opts.width < 16 || opts.height < 16) {
    throw std::invalid_argument("fixtures need per_stage >= 1 and images of at least 16x16");
  }
  fs::create_directories(dir / "images");
  SplitMix64 root(opts.seed);
  ordered_json via = ordered_json::object();
  int count = 0;
  for (int stage = 1; stage <= 3; ++stage) {
    for (int i = 0; i < opts.per_stage; ++i, ++count) {
      SplitMix64 rng = root.fork(static_cast<std::uint64_t>(count));
      const int w = opts.width;
      const int h = opts.height;
      RgbImage img(w, h);
      const double cx = 0.5 * w;
      const double cy = 0.5 * h;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double r = std::hypot((x - cx) / w, (y - cy) / h);
          const int noise = static_cast<int>(rng.below(17)) - 8;
          const double fall = std::max(0.0, 1.0 - 1.4 * r);
          img(x, y, 0) = static_cast<std::uint8_t>(std::clamp(90.0 + 110.0 * fall + noise, 0.0, 255.0));
          img(x, y, 1) = static_cast<std::uint8_t>(std::clamp(40.0 + 50.0 * fall + noise, 0.0, 255.0));
          img(x, y, 2) = static_cast<std::uint8_t>(std::clamp(25.0 + 20.0 * fall + noise, 0.0, 255.0));
        }
      }
      const double thickness = 0.6 + 0.8 * stage;
      ordered_json regions = ordered_json::array();
      const Ridge first = random_ridge(rng, w, h, 0.25, 0.40, thickness);
      paint(img, first, rng);
      regions.push_back(region_for(first, w, h, stage, opts.stage_key));
      if (i % 4 == 3) {
        const Ridge second = random_ridge(rng, w, h, 0.68, 0.75, thickness);
        paint(img, second, rng);
        regions.push_back(region_for(second, w, h, stage, opts.stage_key));
      }

      char name[64];
      std::snprintf(name, sizeof name, "fx_s%d_%03d.png", stage, i);
      const fs::path file = dir / "images" / name;
      png::write(file, img);
      const auto bytes = fs::file_size(file);
      via[std::string(name) + std::to_string(bytes)] = {
          {"filename", name}, {"size", bytes}, {"regions", regions}, {"file_attributes", ordered_json::object()}};
    }
  }
  std::ofstream out(dir / "via.json", std::ios::trunc);
  out << via.dump(1) << '\n';
  if (!out) throw IoError("cannot write '" + (dir / "via.json").string() + "'");
  return count;
}

}  // namespace rop
