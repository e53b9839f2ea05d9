#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "oracles.hpp"
#include "rop/enhance.hpp"
#include "rop/rng.hpp"

using namespace rop;

namespace {

GrayImage gray(int w, int h, std::vector<std::uint8_t> px) { return GrayImage(w, h, std::move(px)); }

}  // namespace

TEST_CASE("histogram") {
  const Histogram256 h = histogram(GrayImage(2, 2, 7));
  CHECK(h.bins[7] == 4);
  CHECK(h.total() == 4);

  const Histogram256 h2 = histogram(gray(2, 2, {0, 0, 255, 255}));
  CHECK(h2.bins[0] == 2);
  CHECK(h2.bins[255] == 2);

  GrayImage r(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) r(x, y) = std::uint8_t((x * y) % 37);
  const Histogram256 hr = histogram(r);
  for (int v = 0; v < 256; ++v) {
    std::uint64_t n = 0;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) n += r(x, y) == v;
    REQUIRE(hr.bins[std::size_t(v)] == n);
  }
}

TEST_CASE("equalize") {
  CHECK(equalize(GrayImage(3, 3, 42)) == GrayImage(3, 3, 42));
  CHECK(equalize(gray(2, 1, {0, 255})) == gray(2, 1, {0, 255}));
  // C(10)=2, C(20)=3, C(30)=4, Cmin=2, N-Cmin=2: 10->0, 20->127.5->128, 30->255
  CHECK(equalize(gray(4, 1, {10, 10, 20, 30})) == gray(4, 1, {0, 0, 128, 255}));
  // shifted gray levels get stretched to the full range
  CHECK(equalize(gray(3, 1, {100, 101, 102})) == gray(3, 1, {0, 128, 255}));
}

TEST_CASE("clip_histogram conserves mass and spreads the remainder from bin 0") {
  Histogram256 h;
  h.bins[5] = 300;
  h.bins[9] = 3;
  const Histogram256 c = clip_histogram(h, 10);
  CHECK(c.total() == h.total());
  // excess 290 = 256 + 34: every bin +1, bins 0..33 another +1
  CHECK(c.bins[5] == 10 + 2);
  CHECK(c.bins[9] == 3 + 2);
  CHECK(c.bins[40] == 1);
  CHECK(c.bins[33] == 2);
  CHECK(c.bins[34] == 1);
}

TEST_CASE("tile_bounds: last tile absorbs the remainder") {
  CHECK(tile_bounds(10, 3) == std::vector<int>{0, 3, 6, 10});
  CHECK(tile_bounds(8, 8) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("clahe") {
  SplitMix64 rng(99);
  SUBCASE("1x1 grid with non-binding clip equals equalize") {
    for (int i = 0; i < 10; ++i) {
      const GrayImage img = oracle::random_image(rng, 5 + int(rng.below(40)), 5 + int(rng.below(40)));
      CHECK(clahe(img, {1, 1, 256.0}) == equalize(img));
    }
  }
  SUBCASE("constant image stays constant for any grid") {
    CHECK(clahe(GrayImage(37, 23, 90), {8, 8, 2.0}) == GrayImage(37, 23, 90));
    CHECK(clahe(GrayImage(16, 16, 0), {3, 5, 0.5}) == GrayImage(16, 16, 0));
  }
  SUBCASE("16x16, 2x2 tiles, clip 2.0 matches the straight-line reference") {
    const GrayImage img = oracle::random_image(rng, 16, 16);
    CHECK(clahe(img, {2, 2, 2.0}) == oracle::clahe(img, 2, 2, 2.0));
  }
  SUBCASE("random shapes and grids match the reference") {
    for (int i = 0; i < 30; ++i) {
      const int w = 4 + int(rng.below(60)), h = 4 + int(rng.below(60));
      const int tx = 1 + int(rng.below(std::uint64_t(std::min(w, 9))));
      const int ty = 1 + int(rng.below(std::uint64_t(std::min(h, 9))));
      const double clip = 0.5 + rng.unit() * 4.0;
      const GrayImage img = oracle::random_image(rng, w, h);
      REQUIRE(clahe(img, {tx, ty, clip}) == oracle::clahe(img, tx, ty, clip));
    }
  }
  CHECK_THROWS_AS(clahe(GrayImage(4, 4), {5, 1, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(clahe(GrayImage(4, 4), {1, 1, 0.0}), std::invalid_argument);
}

TEST_CASE("standardize") {
  const auto zero = standardize(GrayImage(4, 4, 200));
  for (double v : zero.data) CHECK(v == 0.0);

  const auto two = standardize(gray(2, 1, {0, 2}));
  CHECK(two.data[0] == doctest::Approx(-1.0));
  CHECK(two.data[1] == doctest::Approx(1.0));

  // mean 15, population variance (225 + 25 + 25 + 225) / 4 = 125
  const auto four = standardize(gray(4, 1, {0, 10, 20, 30}));
  const double sd = std::sqrt(125.0);
  CHECK(four.data[0] == doctest::Approx(-15.0 / sd).epsilon(1e-12));
  CHECK(four.data[1] == doctest::Approx(-5.0 / sd).epsilon(1e-12));
  CHECK(four.data[2] == doctest::Approx(5.0 / sd).epsilon(1e-12));
  CHECK(four.data[3] == doctest::Approx(15.0 / sd).epsilon(1e-12));
}

TEST_CASE("preprocessing chain is deterministic") {
  SplitMix64 rng(5);
  const GrayImage img = oracle::random_image(rng, 64, 48);
  auto chain = [](const GrayImage& g) { return standardize(clahe(equalize(g), {8, 8, 2.0})).data; };
  CHECK(chain(img) == chain(img));
}
