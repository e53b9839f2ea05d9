#pragma once

#include <cstddef>
#include <iosfwd>
#include <json.hpp>
#include <span>
#include <utility>
#include <vector>

#include "rop/annot.hpp"
#include "rop/detect.hpp"

namespace rop {

/// |a & b| / |a | b|, 0 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

struct MatchResult {
  std::size_t detection = 0;  ///< index into the input detections
  double confidence = 0.0;
  bool true_positive = false;
  double best_iou = 0.0;
};

/// Detections in descending confidence (stable), each paired with the
/// highest-IoU ground truth not yet consumed; a true positive needs IoU
/// strictly above `iou_threshold` and consumes that ground truth.
std::vector<MatchResult> match_detections(const std::vector<Detection>& dets,
                                          const std::vector<BinaryMask>& gts,
                                          double iou_threshold = 0.5);

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
  double confidence = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  ///< descending confidence
  std::size_t num_ground_truth = 0;
};

/// Ranks `matches` (which may pool several images) by descending confidence
/// and appends one point per detection.
PrCurve pr_curve(std::vector<MatchResult> matches, std::size_t num_ground_truth);

enum class ApMethod {
  AllPoint,   ///< area under the monotone precision envelope
  Trapezoid,  ///< raw trapezoids between consecutive points, from (0, p1)
};

double average_precision(const PrCurve& curve, ApMethod method = ApMethod::AllPoint);

// ---------------------------------------------------------------------------
// Classification

/// Rows are true Stage1..3; columns are predicted [RopFree,] Stage1..3.
class ConfusionMatrix {
 public:
  static ConfusionMatrix from_pairs(std::span<const std::pair<StageLabel, StageLabel>> pairs);

  /// counts[true stage][predicted]; `rop_free` is the optional leading column.
  static ConfusionMatrix from_counts(const std::array<std::array<std::size_t, 3>, 3>& counts,
                                     std::optional<std::array<std::size_t, 3>> rop_free = std::nullopt);

  bool has_rop_free() const noexcept { return has_rop_free_; }
  std::size_t count(StageLabel truth, StageLabel predicted) const;
  std::size_t row_total(StageLabel truth) const;
  std::size_t column_total(StageLabel predicted) const;
  std::size_t total() const;
  std::vector<StageLabel> columns() const;

  nlohmann::ordered_json to_json() const;
  static ConfusionMatrix from_json(const nlohmann::ordered_json& j);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  // cells_[t][p], p = 0 is RopFree
  std::array<std::array<std::size_t, 4>, 3> cells_{};
  bool has_rop_free_ = false;
};

struct ClassStats {
  StageLabel stage = StageLabel::Stage1;
  std::size_t correct = 0;
  std::size_t predicted = 0;  ///< column total
  std::size_t actual = 0;     ///< row total
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<ClassStats> classes;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  ConfusionMatrix matrix;

  nlohmann::ordered_json to_json() const;
};

MetricsReport report(const ConfusionMatrix& cm);

void print_report(std::ostream& os, const MetricsReport& r);
void print_matrix(std::ostream& os, const ConfusionMatrix& cm);

/// "confidence,precision,recall" rows.
void write_pr_csv(std::ostream& os, const PrCurve& curve);
nlohmann::ordered_json pr_curve_json(const PrCurve& curve);

}  // namespace rop
