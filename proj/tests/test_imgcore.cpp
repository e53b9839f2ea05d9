#include <doctest.h>

#include <stdexcept>

#include <filesystem>

#include "oracles.hpp"
#include "rop/error.hpp"
#include "rop/imgcore.hpp"
#include "rop/png_io.hpp"
#include "rop/rng.hpp"

using namespace rop;

namespace {

GrayImage gray(int w, int h, std::vector<std::uint8_t> px) { return GrayImage(w, h, std::move(px)); }

GrayImage ramp(int w, int h) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) % 256);
  return img;
}

}  // namespace

TEST_CASE("raster construction validates dimensions") {
  CHECK_THROWS_AS(GrayImage(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(GrayImage(2, 2, std::vector<std::uint8_t>(3)), DimensionMismatch);
  RgbImage rgb(2, 3);
  CHECK(rgb.data().size() == 18);
}

TEST_CASE("to_grayscale weights") {
  RgbImage img(4, 1);
  auto set = [&](int x, int r, int g, int b) {
    img(x, 0, 0) = std::uint8_t(r);
    img(x, 0, 1) = std::uint8_t(g);
    img(x, 0, 2) = std::uint8_t(b);
  };
  set(0, 0, 0, 0);
  set(1, 255, 255, 255);
  set(2, 100, 150, 200);  // 30 + 88.5 + 22 = 140.5 -> 141
  set(3, 255, 0, 0);      // 76.5 -> 77
  const GrayImage g = to_grayscale(img);
  CHECK(g(0, 0) == 0);
  CHECK(g(1, 0) == 255);
  CHECK(g(2, 0) == 141);
  CHECK(g(3, 0) == 77);
}

TEST_CASE("to_grayscale fixes gray pixels for every intensity") {
  RgbImage img(256, 1);
  for (int v = 0; v < 256; ++v)
    for (int c = 0; c < 3; ++c) img(v, 0, c) = std::uint8_t(v);
  const GrayImage g = to_grayscale(img);
  for (int v = 0; v < 256; ++v) CHECK(g(v, 0) == v);
}

TEST_CASE("resize_bilinear") {
  SUBCASE("identity at own size") {
    const GrayImage img = ramp(13, 7);
    CHECK(resize_bilinear(img, 13, 7) == img);
  }
  SUBCASE("constant stays constant") {
    const GrayImage img(5, 9, 77);
    CHECK(resize_bilinear(img, 17, 3) == GrayImage(17, 3, 77));
  }
  SUBCASE("2x1 upsampled to 4x1 with half-pixel centers") {
    // sample centers map to -0.25 (clamped), 0.25, 0.75, 1.25 (clamped)
    const GrayImage out = resize_bilinear(gray(2, 1, {0, 255}), 4, 1);
    CHECK(out == gray(4, 1, {0, 64, 191, 255}));
  }
  SUBCASE("matches the per-pixel reference") {
    SplitMix64 rng(11);
    for (int i = 0; i < 20; ++i) {
      const GrayImage img = oracle::random_image(rng, 3 + int(rng.below(30)), 3 + int(rng.below(30)));
      const int w = 1 + int(rng.below(40)), h = 1 + int(rng.below(40));
      CHECK(resize_bilinear(img, w, h) == oracle::resize(img, w, h));
    }
  }
  CHECK_THROWS_AS(resize_bilinear(GrayImage(2, 2), 0, 4), std::invalid_argument);
}

TEST_CASE("crop_edges") {
  const GrayImage img = ramp(100, 100);
  CHECK(crop_edges(img, {}) == img);

  const GrayImage all = crop_edges(img, {0.05, 0.05, 0.05, 0.05});
  CHECK(all.width() == 90);
  CHECK(all.height() == 90);
  CHECK(all(0, 0) == img(5, 5));

  const GrayImage top = crop_edges(img, {0.03, 0, 0, 0});
  CHECK(top.width() == 100);
  CHECK(top.height() == 97);
  for (int y = 0; y < 97; ++y)
    for (int x = 0; x < 100; ++x) REQUIRE(top(x, y) == img(x, y + 3));

  CHECK_THROWS_AS(crop_edges(img, {0.06, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(crop_edges(img, {-0.01, 0, 0, 0}), std::invalid_argument);
  // a 1-pixel-high image cannot lose a row, floor(0.05 * 1) = 0
  CHECK(crop_edges(GrayImage(10, 1), {0.05, 0.05, 0, 0}).height() == 1);
}

TEST_CASE("center_zoom") {
  const GrayImage img = ramp(100, 100);
  CHECK(center_zoom(img, 1.0) == img);
  CHECK(center_zoom(GrayImage(31, 17, 9), 1.07) == GrayImage(31, 17, 9));

  // 100 / 1.1 = 90.9 -> 90x90 window at offset 5
  const GrayImage expected = oracle::resize(crop_region(img, 5, 5, 90, 90), 100, 100);
  CHECK(center_zoom(img, 1.1) == expected);
  CHECK(zoom_box(100, 100, 1.1) == CropBox{5, 5, 90, 90});

  CHECK_THROWS_AS(center_zoom(img, 0.99), std::invalid_argument);
}

TEST_CASE("png round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "rop_png_test";
  std::filesystem::create_directories(dir);
  SplitMix64 rng(3);
  const GrayImage g = oracle::random_image(rng, 23, 11);
  png::write(dir / "g.png", g);
  CHECK(png::read_gray(dir / "g.png") == g);
  CHECK(png::read_size(dir / "g.png").width == 23);

  RgbImage rgb(5, 4);
  for (auto& v : rgb.data()) v = std::uint8_t(rng.below(256));
  png::write(dir / "c.png", rgb);
  const auto back = png::read(dir / "c.png");
  REQUIRE(std::holds_alternative<RgbImage>(back));
  CHECK(std::get<RgbImage>(back) == rgb);
  CHECK(png::read_gray(dir / "c.png") == to_grayscale(rgb));

  CHECK_THROWS_AS(png::read(dir / "missing.png"), IoError);
  std::filesystem::remove_all(dir);
}
