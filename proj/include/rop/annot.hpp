#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rop {

enum class StageLabel : std::uint8_t { RopFree = 0, Stage1 = 1, Stage2 = 2, Stage3 = 3 };

inline constexpr StageLabel kStages[] = {StageLabel::Stage1, StageLabel::Stage2,
                                         StageLabel::Stage3};

int stage_number(StageLabel s) noexcept;
/// 1..3 -> Stage1..Stage3; anything else is nullopt. 0 is not accepted.
std::optional<StageLabel> stage_from_number(long n) noexcept;
std::string_view stage_name(StageLabel s) noexcept;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct AnnotatedPolygon {
  std::vector<Point> vertices;
  StageLabel stage = StageLabel::Stage1;
  bool operator==(const AnnotatedPolygon&) const = default;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(int x, int y) const noexcept { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) noexcept { bits_[index(x, y)] = v ? 1 : 0; }

  /// One byte per pixel, 0 or 1.
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  bool same_shape(const BinaryMask& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> runs;  ///< alternating, starting with unset pixels
  bool operator==(const RleMask&) const = default;
};

// ---------------------------------------------------------------------------
// VIA (VGG Image Annotator) import

struct ViaOptions {
  std::string stage_key = "stage";
};

struct ImageAnnotations {
  std::string filename;
  std::vector<AnnotatedPolygon> polygons;
};

/// Accepts both a bare annotation export (map of "<filename><size>" -> entry)
/// and a full project file (entries under "_via_img_metadata"). Entries keep
/// document order. Throws ParseError / AnnotationError.
std::vector<ImageAnnotations> parse_via(std::string_view json_text, const ViaOptions& opts = {});

// ---------------------------------------------------------------------------
// Masks

struct Rasterized {
  BinaryMask mask;
  bool clamped = false;     ///< some vertex lay outside the image and was moved onto it
  bool degenerate = false;  ///< zero area after clamping; mask is empty
};

/// Even-odd scanline fill sampled at pixel centers; edges are half-open
/// (a center exactly on a left/top edge is inside, on a right/bottom edge outside).
Rasterized rasterize(const AnnotatedPolygon& poly, int width, int height);

/// Signed shoelace area.
double polygon_area(std::span<const Point> vertices) noexcept;

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);
std::size_t mask_area(const BinaryMask& m) noexcept;

RleMask rle_encode(const BinaryMask& m);
/// Throws std::invalid_argument if the runs do not describe width x height pixels.
BinaryMask rle_decode(const RleMask& r);

}  // namespace rop
