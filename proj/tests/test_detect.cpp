#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "rop/detect.hpp"
#include "rop/error.hpp"

using namespace rop;
namespace fs = std::filesystem;

namespace {

BinaryMask block(int w, int h, int x0, int y0, int bw, int bh) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) m.set(x, y);
  return m;
}

SampleRecord record_with(std::vector<AnnotatedPolygon> polys) {
  SampleRecord r;
  r.id = "rec";
  r.source_path = "sub/rec.png";
  r.source_width = 32;
  r.source_height = 32;
  r.stage = polys.empty() ? StageLabel::Stage1 : polys.front().stage;
  r.polygons = std::move(polys);
  return r;
}

}  // namespace

TEST_CASE("null backend returns nothing") {
  const auto b = make_backend({BackendKind::Null});
  CHECK(b->predict(record_with({}), GrayImage(8, 8)).empty());
}

TEST_CASE("oracle backend rasterizes annotations at the image size") {
  const AnnotatedPolygon p{{{4, 4}, {20, 4}, {20, 12}, {4, 12}}, StageLabel::Stage2};
  const auto rec = record_with({p});
  const auto dets = make_backend({BackendKind::Oracle})->predict(rec, GrayImage(32, 32));
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].stage == StageLabel::Stage2);
  CHECK(dets[0].confidence == 1.0);
  CHECK(dets[0].mask == rasterize(p, 32, 32).mask);

  // half-size output scales polygon coordinates by 0.5
  const auto half = make_backend({BackendKind::Oracle})->predict(rec, GrayImage(16, 16));
  CHECK(mask_area(half[0].mask) == 8 * 4);
}

TEST_CASE("file backend") {
  const fs::path dir = fs::temp_directory_path() / "rop_sidecar_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto rec = record_with({});

  std::vector<Detection> dets{{block(8, 8, 0, 0, 2, 2), StageLabel::Stage1, 0.9},
                              {block(8, 8, 4, 4, 3, 3), StageLabel::Stage3, 0.7},
                              {block(8, 8, 1, 1, 3, 3), StageLabel::Stage2, 0.8}};
  write_sidecar(sidecar_path(dir, rec), dets);
  CHECK(sidecar_path(dir, rec).filename() == "rec.pred.json");

  const auto kept = make_backend({BackendKind::File, 0.8, dir})->predict(rec, GrayImage(8, 8));
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].confidence == 0.9);
  CHECK(kept[1].confidence == 0.8);  // the threshold itself passes
  CHECK(kept[0].mask == dets[0].mask);
  for (const auto& d : kept) CHECK(d.confidence >= 0.8);

  CHECK_THROWS_AS(make_backend({BackendKind::File, 0.8, dir})->predict(rec, GrayImage(9, 8)), DimensionMismatch);

  auto other = rec;
  other.id = "gone";
  other.source_path = "gone.png";
  try {
    make_backend({BackendKind::File, 0.8, dir})->predict(other, GrayImage(8, 8));
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("'gone'") != std::string::npos);
  }

  std::ofstream(dir / "broken.pred.json") << "{\"detections\": [";
  auto broken = rec;
  broken.source_path = "broken.png";
  CHECK_THROWS_AS(make_backend({BackendKind::File, 0.8, dir})->predict(broken, GrayImage(8, 8)), ParseError);

  CHECK_THROWS_AS(make_backend({BackendKind::File, 0.8, {}}), std::invalid_argument);
  CHECK_THROWS_AS(make_backend({BackendKind::Null, 1.5}), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("sidecar text round trip") {
  SplitMix64 rng(2);
  std::vector<Detection> dets;
  for (int i = 0; i < 5; ++i) {
    dets.push_back({oracle::random_mask(rng, 11, 6, 0.3), *stage_from_number(1 + long(rng.below(3))), rng.unit()});
  }
  const auto back = parse_sidecar(format_sidecar(dets));
  REQUIRE(back.size() == dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(back[i].mask == dets[i].mask);
    CHECK(back[i].stage == dets[i].stage);
    CHECK(back[i].confidence == dets[i].confidence);
  }
  CHECK_THROWS_AS(parse_sidecar(R"({"detections": [{"stage": 0, "confidence": 0.5,
      "mask": {"width": 1, "height": 1, "runs": [1]}}]})"),
                  Error);
  CHECK_THROWS_AS(parse_sidecar(R"({"detections": [{"stage": 1, "confidence": 0.5,
      "mask": {"width": 2, "height": 1, "runs": [1]}}]})"),
                  Error);
}

TEST_CASE("extract_stage") {
  SUBCASE("no detections is ROP-free") { CHECK(extract_stage({}).stage == StageLabel::RopFree); }
  SUBCASE("empty masks are ROP-free") {
    CHECK(extract_stage({{BinaryMask(4, 4), StageLabel::Stage2, 0.9}}).stage == StageLabel::RopFree);
  }
  SUBCASE("largest area wins") {
    const auto p = extract_stage({{block(20, 20, 0, 0, 10, 10), StageLabel::Stage2, 0.9},
                                  {block(20, 20, 0, 10, 15, 10), StageLabel::Stage3, 0.85}});
    CHECK(p.stage == StageLabel::Stage3);
    CHECK(p.per_stage_area.at(StageLabel::Stage2) == 100);
    CHECK(p.per_stage_area.at(StageLabel::Stage3) == 150);
  }
  SUBCASE("same-stage masks are unioned before comparing") {
    // two 6x10 Stage-2 blocks overlapping in 3x10 -> union 90 beats one Stage-3 block of 80
    const BinaryMask a = block(20, 20, 0, 0, 6, 10), b = block(20, 20, 3, 0, 6, 10);
    const BinaryMask c = block(20, 20, 0, 12, 10, 8);
    REQUIRE(mask_area(mask_union(a, b)) == 90);
    const auto p = extract_stage({{a, StageLabel::Stage2, 0.9}, {b, StageLabel::Stage2, 0.9}, {c, StageLabel::Stage3, 0.99}});
    CHECK(p.stage == StageLabel::Stage2);
    CHECK(p.per_stage_area.at(StageLabel::Stage2) == 90);
  }
  SUBCASE("ties go to the lower stage") {
    const auto p = extract_stage({{block(8, 8, 4, 4, 2, 2), StageLabel::Stage3, 0.9},
                                  {block(8, 8, 0, 0, 2, 2), StageLabel::Stage1, 0.9}});
    CHECK(p.stage == StageLabel::Stage1);
  }
  SUBCASE("order and confidence scale do not matter") {
    SplitMix64 rng(31);
    for (int i = 0; i < 30; ++i) {
      std::vector<Detection> dets;
      for (int k = 0; k < 4; ++k) {
        dets.push_back({oracle::random_mask(rng, 10, 10, rng.unit() * 0.3), *stage_from_number(1 + long(rng.below(3))),
                        0.1 + 0.9 * rng.unit()});
      }
      auto shuffled = dets;
      std::reverse(shuffled.begin(), shuffled.end());
      for (auto& d : shuffled) d.confidence *= 0.5;
      CHECK(extract_stage(dets).stage == extract_stage(shuffled).stage);
      BinaryMask all(10, 10);
      for (const auto& d : dets) all = mask_union(all, d.mask);
      CHECK((extract_stage(dets).stage == StageLabel::RopFree) == (mask_area(all) == 0));
    }
  }
  CHECK_THROWS_AS(extract_stage({{BinaryMask(4, 4), StageLabel::Stage1, 1.0}, {BinaryMask(5, 4), StageLabel::Stage1, 1.0}}),
                  DimensionMismatch);
}
