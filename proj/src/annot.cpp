#include "rop/annot.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

#include "rop/error.hpp"

namespace rop {

using ordered_json = nlohmann::ordered_json;

int stage_number(StageLabel s) noexcept { return static_cast<int>(s); }

std::optional<StageLabel> stage_from_number(long n) noexcept {
  if (n >= 1 && n <= 3) return static_cast<StageLabel>(n);
  return std::nullopt;
}

std::string_view stage_name(StageLabel s) noexcept {
  switch (s) {
    case StageLabel::RopFree: return "ROP-free";
    case StageLabel::Stage1: return "Stage 1";
    case StageLabel::Stage2: return "Stage 2";
    case StageLabel::Stage3: return "Stage 3";
  }
  return "?";
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> coordinate_array(const ordered_json& shape, const char* key,
                                     const std::string& image, int region) {
  const auto it = shape.find(key);
  if (it == shape.end() || !it->is_array()) {
    throw AnnotationError(image, region, std::string("missing '") + key + "' array");
  }
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw AnnotationError(image, region, std::string("non-numeric '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

StageLabel parse_stage(const ordered_json& attrs, const ViaOptions& opts, const std::string& image,
                       int region) {
  const auto it = attrs.find(opts.stage_key);
  if (it == attrs.end()) {
    throw AnnotationError(image, region, "missing stage attribute '" + opts.stage_key + "'");
  }
  std::optional<StageLabel> stage;
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    if (s.size() == 1) stage = stage_from_number(s[0] - '0');
  } else if (it->is_number_integer()) {
    stage = stage_from_number(it->get<long>());
  }
  if (!stage) throw AnnotationError(image, region, "unknown stage value " + it->dump());
  return *stage;
}

AnnotatedPolygon parse_region(const ordered_json& region, const ViaOptions& opts,
                              const std::string& image, int index) {
  if (!region.is_object()) throw AnnotationError(image, index, "region is not an object");
  const auto shape = region.find("shape_attributes");
  if (shape == region.end() || !shape->is_object()) {
    throw AnnotationError(image, index, "missing shape_attributes");
  }
  const std::string name = shape->value("name", std::string{});
  if (name != "polygon") throw AnnotationError(image, index, "unsupported shape '" + name + "'");

  const auto xs = coordinate_array(*shape, "all_points_x", image, index);
  const auto ys = coordinate_array(*shape, "all_points_y", image, index);
  if (xs.size() != ys.size()) throw AnnotationError(image, index, "x/y point counts differ");
  if (xs.size() < 3) throw AnnotationError(image, index, "polygon has fewer than 3 vertices");

  static const ordered_json kEmpty = ordered_json::object();
  const auto attrs = region.find("region_attributes");
  AnnotatedPolygon poly;
  poly.stage = parse_stage(attrs != region.end() ? *attrs : kEmpty, opts, image, index);
  poly.vertices.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) poly.vertices.push_back({xs[i], ys[i]});
  return poly;
}

}  // namespace

std::vector<ImageAnnotations> parse_via(std::string_view json_text, const ViaOptions& opts) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed VIA JSON: " + std::string(e.what()), e.byte);
  }
  if (!doc.is_object()) throw ParseError("VIA document is not a JSON object", 0);
  const ordered_json* images = &doc;
  if (auto meta = doc.find("_via_img_metadata"); meta != doc.end()) images = &*meta;
  if (!images->is_object()) throw ParseError("VIA image map is not an object", 0);

  std::vector<ImageAnnotations> out;
  for (const auto& [key, entry] : images->items()) {
    if (!entry.is_object()) throw AnnotationError(key, -1, "image entry is not an object");
    ImageAnnotations ann;
    ann.filename = entry.value("filename", key);
    const auto regions = entry.find("regions");
    if (regions != entry.end() && !regions->is_null()) {
      // VIA 1.x stores regions as an object keyed "0", "1", ...; 2.x as an array.
      if (!regions->is_array() && !regions->is_object()) {
        throw AnnotationError(ann.filename, -1, "regions must be an array or object");
      }
      int index = 0;
      for (const auto& region : *regions) {
        ann.polygons.push_back(parse_region(region, opts, ann.filename, index++));
      }
    }
    out.push_back(std::move(ann));
  }
  return out;
}

// ---------------------------------------------------------------------------

double polygon_area(std::span<const Point> v) noexcept {
  double twice = 0.0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    twice += v[j].x * v[i].y - v[i].x * v[j].y;
  }
  return 0.5 * twice;
}

namespace {

// Zero enclosed area under any fill rule.
bool collinear(const std::vector<Point>& v) noexcept {
  const Point& o = v[0];
  const auto far = std::find_if(v.begin(), v.end(), [&](const Point& p) { return !(p == o); });
  if (far == v.end()) return true;
  return std::all_of(v.begin(), v.end(), [&](const Point& p) {
    return (far->x - o.x) * (p.y - o.y) - (far->y - o.y) * (p.x - o.x) == 0.0;
  });
}

}  // namespace

Rasterized rasterize(const AnnotatedPolygon& poly, int width, int height) {
  if (poly.vertices.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  Rasterized result{BinaryMask(width, height)};

  std::vector<Point> v = poly.vertices;
  for (Point& p : v) {
    const Point c{std::clamp(p.x, 0.0, static_cast<double>(width)),
                  std::clamp(p.y, 0.0, static_cast<double>(height))};
    if (!(c == p)) result.clamped = true;
    p = c;
  }
  if (collinear(v)) {
    result.degenerate = true;
    return result;
  }

  double ymin = v[0].y, ymax = v[0].y;
  for (const Point& p : v) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row_begin = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
  const int row_end = std::min(height, static_cast<int>(std::ceil(ymax + 0.5)));

  std::vector<double> crossings;
  for (int row = row_begin; row < row_end; ++row) {
    const double cy = row + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      const Point& a = v[i];
      const Point& b = v[j];
      if ((a.y > cy) != (b.y > cy)) {
        crossings.push_back((b.x - a.x) * (cy - a.y) / (b.y - a.y) + a.x);
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // pixel x is inside iff crossings[k] <= x + 0.5 < crossings[k + 1]
      int x = std::max(0, static_cast<int>(std::ceil(crossings[k] - 0.5)) - 1);
      while (x < width && x + 0.5 < crossings[k]) ++x;
      for (; x < width && x + 0.5 < crossings[k + 1]; ++x) result.mask.set(x, row);
    }
  }
  return result;
}

namespace {

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  if (!a.same_shape(b)) throw DimensionMismatch("mask dimensions differ");
  BinaryMask out(a.width(), a.height());
  auto x = a.bits();
  auto y = b.bits();
  auto o = out.bits();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = op(x[i], y[i]);
  return out;
}

}  // namespace

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](std::uint8_t p, std::uint8_t q) -> std::uint8_t { return p | q; });
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](std::uint8_t p, std::uint8_t q) -> std::uint8_t { return p & q; });
}

std::size_t mask_area(const BinaryMask& m) noexcept {
  return static_cast<std::size_t>(std::count(m.bits().begin(), m.bits().end(), std::uint8_t{1}));
}

RleMask rle_encode(const BinaryMask& m) {
  RleMask r{m.width(), m.height(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t b : m.bits()) {
    if (b != current) {
      r.runs.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  r.runs.push_back(run);
  return r;
}

BinaryMask rle_decode(const RleMask& r) {
  BinaryMask m(r.width, r.height);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    if (i > 0 && r.runs[i] == 0 && r.runs[i - 1] == 0) {
      throw std::invalid_argument("RLE has consecutive zero runs");
    }
    total += r.runs[i];
  }
  if (total != m.size()) {
    throw std::invalid_argument("RLE runs sum to " + std::to_string(total) + ", expected " +
                                std::to_string(m.size()));
  }
  auto bits = m.bits();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : r.runs) {
    std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(pos), run, value);
    pos += run;
    value ^= 1;
  }
  return m;
}

}  // namespace rop
