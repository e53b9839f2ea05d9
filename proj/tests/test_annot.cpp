#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "rop/annot.hpp"
#include "rop/error.hpp"
#include "rop/rng.hpp"

using namespace rop;

namespace {

AnnotatedPolygon poly(std::vector<Point> v, StageLabel s = StageLabel::Stage2) { return {std::move(v), s}; }

const char* kOneImage = R"({
  "retina_001.png123456": {
    "filename": "retina_001.png",
    "size": 123456,
    "regions": [
      {"shape_attributes": {"name": "polygon", "all_points_x": [10, 40, 40, 10], "all_points_y": [5, 5, 20, 20]},
       "region_attributes": {"stage": "2"}}
    ],
    "file_attributes": {}
  }
})";

}  // namespace

TEST_CASE("parse_via") {
  SUBCASE("one image one polygon") {
    const auto out = parse_via(kOneImage);
    REQUIRE(out.size() == 1);
    CHECK(out[0].filename == "retina_001.png");
    REQUIRE(out[0].polygons.size() == 1);
    CHECK(out[0].polygons[0].stage == StageLabel::Stage2);
    CHECK(out[0].polygons[0].vertices[2] == Point{40, 20});
  }
  SUBCASE("empty export") { CHECK(parse_via("{}").empty()); }
  SUBCASE("project file with VIA 1.x region objects, integer stage and custom key") {
    const auto out = parse_via(R"({"_via_settings": {}, "_via_img_metadata": {
        "b.png1": {"filename": "b.png", "size": 1, "regions": {}},
        "a.png2": {"filename": "a.png", "size": 2, "regions": {"0": {
           "shape_attributes": {"name": "polygon", "all_points_x": [0, 4, 0], "all_points_y": [0, 0, 4]},
           "region_attributes": {"ROP": 3}}}}}})",
                               ViaOptions{"ROP"});
    REQUIRE(out.size() == 2);
    CHECK(out[0].filename == "b.png");  // document order kept
    CHECK(out[0].polygons.empty());
    CHECK(out[1].polygons.at(0).stage == StageLabel::Stage3);
  }
  SUBCASE("rect region is rejected with its location") {
    try {
      parse_via(R"({"x.png9": {"filename": "x.png", "regions": [
          {"shape_attributes": {"name": "polygon", "all_points_x": [0, 4, 0], "all_points_y": [0, 0, 4]},
           "region_attributes": {"stage": "1"}},
          {"shape_attributes": {"name": "rect", "x": 1, "y": 1, "width": 3, "height": 3},
           "region_attributes": {"stage": "1"}}]}})");
      FAIL("expected AnnotationError");
    } catch (const AnnotationError& e) {
      CHECK(e.image() == "x.png");
      CHECK(e.region() == 1);
    }
  }
  SUBCASE("unknown stage value") {
    CHECK_THROWS_AS(parse_via(R"({"x.png": {"filename": "x.png", "regions": [
        {"shape_attributes": {"name": "polygon", "all_points_x": [0, 4, 0], "all_points_y": [0, 0, 4]},
         "region_attributes": {"stage": "4"}}]}})"),
                    AnnotationError);
  }
  SUBCASE("malformed JSON reports a byte offset") {
    try {
      parse_via(R"({"x.png": {"filename": )");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() > 0);
    }
  }
}

TEST_CASE("rasterize") {
  SUBCASE("axis-aligned square") {
    const auto r = rasterize(poly({{0, 0}, {4, 0}, {4, 4}, {0, 4}}), 8, 8);
    CHECK(mask_area(r.mask) == 16);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(r.mask(x, y) == (x < 4 && y < 4));
    CHECK(r.mask == oracle::rasterize(poly({{0, 0}, {4, 0}, {4, 4}, {0, 4}}), 8, 8));
    CHECK_FALSE(r.degenerate);
    CHECK_FALSE(r.clamped);
  }
  SUBCASE("collinear vertices give an empty mask and a warning") {
    const auto r = rasterize(poly({{0, 0}, {3, 3}, {6, 6}}), 8, 8);
    CHECK(r.degenerate);
    CHECK(mask_area(r.mask) == 0);
  }
  SUBCASE("half-open edges through pixel centers") {
    // left edge at x = 1.5 passes through centers of column 1 (inside), right edge at 3.5 (outside)
    const auto r = rasterize(poly({{1.5, 1.5}, {3.5, 1.5}, {3.5, 3.5}, {1.5, 3.5}}), 6, 6);
    CHECK(r.mask(1, 1));
    CHECK(r.mask(2, 2));
    CHECK_FALSE(r.mask(3, 1));
    CHECK_FALSE(r.mask(1, 3));
    CHECK(mask_area(r.mask) == 4);
  }
  SUBCASE("out-of-bounds vertices are clamped") {
    const auto r = rasterize(poly({{-5, -5}, {20, -5}, {20, 20}, {-5, 20}}), 6, 4);
    CHECK(r.clamped);
    CHECK(mask_area(r.mask) == 24);
  }
  SUBCASE("self-intersecting bowtie follows even-odd") {
    const auto p = poly({{0, 0}, {10, 10}, {10, 0}, {0, 10}});
    CHECK(rasterize(p, 12, 12).mask == oracle::rasterize(p, 12, 12));
    CHECK(mask_area(rasterize(p, 12, 12).mask) > 0);
  }
  SUBCASE("random polygons agree with the pixel-center oracle") {
    SplitMix64 rng(1234);
    for (int i = 0; i < 100; ++i) {
      const int w = 1 + int(rng.below(40)), h = 1 + int(rng.below(40));
      std::vector<Point> v(3 + rng.below(8));
      for (auto& p : v) {
        // integer, half-integer and arbitrary coordinates, some out of bounds
        const auto mode = rng.below(3);
        double x = rng.uniform(-3, w + 3), y = rng.uniform(-3, h + 3);
        if (mode == 0) { x = std::round(x); y = std::round(y); }
        if (mode == 1) { x = std::round(x) + 0.5; y = std::round(y) + 0.5; }
        p = {x, y};
      }
      const auto p = poly(v);
      REQUIRE(rasterize(p, w, h).mask == oracle::rasterize(p, w, h));
    }
  }
}

TEST_CASE("mask algebra") {
  BinaryMask a(4, 4), b(4, 4);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      a.set(x, y);
      b.set(x + 2, y + 2);
    }
  const BinaryMask empty(4, 4);
  CHECK(mask_union(a, empty) == a);
  CHECK(mask_union(a, a) == a);
  CHECK(mask_area(mask_union(a, b)) == 8);
  CHECK(mask_area(BinaryMask(3, 3, true)) == 9);
  CHECK(mask_area(empty) == 0);
  CHECK_THROWS_AS(mask_union(a, BinaryMask(4, 5)), DimensionMismatch);

  SplitMix64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto x = oracle::random_mask(rng, 9, 7, 0.3);
    const auto y = oracle::random_mask(rng, 9, 7, 0.5);
    const auto z = oracle::random_mask(rng, 9, 7, 0.2);
    CHECK(mask_union(x, y) == mask_union(y, x));
    CHECK(mask_union(mask_union(x, y), z) == mask_union(x, mask_union(y, z)));
    CHECK(mask_area(mask_union(x, y)) <= mask_area(x) + mask_area(y));
  }
}

TEST_CASE("RLE") {
  CHECK(rle_encode(BinaryMask(2, 2)).runs == std::vector<std::uint32_t>{4});
  CHECK(rle_encode(BinaryMask(2, 2, true)).runs == std::vector<std::uint32_t>{0, 4});

  SplitMix64 rng(77);
  for (int i = 0; i < 200; ++i) {
    const auto m = oracle::random_mask(rng, 16, 16, rng.unit());
    const RleMask r = rle_encode(m);
    REQUIRE(rle_decode(r) == m);
    for (std::size_t k = 1; k < r.runs.size(); ++k) REQUIRE(r.runs[k] > 0);
  }
  CHECK_THROWS_AS(rle_decode({2, 2, {3}}), std::invalid_argument);
  CHECK_THROWS_AS(rle_decode({2, 2, {2, 0, 0, 2}}), std::invalid_argument);
}
