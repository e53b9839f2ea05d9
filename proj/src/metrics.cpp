#include "rop/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "rop/error.hpp"

namespace rop {

using ordered_json = nlohmann::ordered_json;

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("IoU of masks with different dimensions");
  std::size_t inter = 0;
  std::size_t uni = 0;
  auto x = a.bits();
  auto y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += x[i] & y[i];
    uni += x[i] | y[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<MatchResult> match_detections(const std::vector<Detection>& dets,
                                          const std::vector<BinaryMask>& gts,
                                          double iou_threshold) {
  for (std::size_t i = 1; i < gts.size(); ++i) {
    if (!gts[i].same_shape(gts[0])) throw DimensionMismatch("ground-truth masks differ in size");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  std::vector<bool> consumed(gts.size(), false);
  std::vector<MatchResult> out;
  out.reserve(dets.size());
  for (std::size_t d : order) {
    MatchResult m{d, dets[d].confidence, false, 0.0};
    std::size_t best = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (consumed[g]) continue;
      const double v = iou(dets[d].mask, gts[g]);
      if (best == gts.size() || v > m.best_iou) {
        best = g;
        m.best_iou = v;
      }
    }
    if (best < gts.size() && m.best_iou > iou_threshold) {
      consumed[best] = true;
      m.true_positive = true;
    }
    out.push_back(m);
  }
  return out;
}

PrCurve pr_curve(std::vector<MatchResult> matches, std::size_t num_ground_truth) {
  if (num_ground_truth == 0 && !matches.empty()) {
    throw std::invalid_argument("recall is undefined with zero ground truths");
  }
  std::stable_sort(matches.begin(), matches.end(), [](const MatchResult& a, const MatchResult& b) {
    return a.confidence > b.confidence;
  });
  PrCurve curve;
  curve.num_ground_truth = num_ground_truth;
  curve.points.reserve(matches.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    tp += matches[k].true_positive ? 1 : 0;
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(k + 1),
                            static_cast<double>(tp) / static_cast<double>(num_ground_truth),
                            matches[k].confidence});
  }
  return curve;
}

double average_precision(const PrCurve& curve, ApMethod method) {
  const auto& pts = curve.points;
  if (pts.empty()) return 0.0;
  double ap = 0.0;
  if (method == ApMethod::Trapezoid) {
    double prev_r = 0.0;
    double prev_p = pts.front().precision;
    for (const auto& p : pts) {
      ap += (p.recall - prev_r) * (p.precision + prev_p) / 2.0;
      prev_r = p.recall;
      prev_p = p.precision;
    }
    return ap;
  }
  std::vector<double> envelope(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    envelope[i] = running;
  }
  double prev_r = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ap += (pts[i].recall - prev_r) * envelope[i];
    prev_r = pts[i].recall;
  }
  return ap;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t row_of(StageLabel s) {
  if (s == StageLabel::RopFree) throw std::invalid_argument("ROP-free cannot be a true label");
  return static_cast<std::size_t>(stage_number(s) - 1);
}

std::size_t col_of(StageLabel s) { return static_cast<std::size_t>(stage_number(s)); }

}  // namespace

ConfusionMatrix ConfusionMatrix::from_pairs(std::span<const std::pair<StageLabel, StageLabel>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("confusion matrix needs at least one pair");
  ConfusionMatrix cm;
  for (const auto& [truth, pred] : pairs) {
    ++cm.cells_[row_of(truth)][col_of(pred)];
    if (pred == StageLabel::RopFree) cm.has_rop_free_ = true;
  }
  return cm;
}

ConfusionMatrix ConfusionMatrix::from_counts(const std::array<std::array<std::size_t, 3>, 3>& counts,
                                             std::optional<std::array<std::size_t, 3>> rop_free) {
  ConfusionMatrix cm;
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t p = 0; p < 3; ++p) cm.cells_[t][p + 1] = counts[t][p];
    if (rop_free) cm.cells_[t][0] = (*rop_free)[t];
  }
  cm.has_rop_free_ = rop_free.has_value();
  return cm;
}

std::size_t ConfusionMatrix::count(StageLabel truth, StageLabel predicted) const {
  return cells_[row_of(truth)][col_of(predicted)];
}

std::size_t ConfusionMatrix::row_total(StageLabel truth) const {
  const auto& row = cells_[row_of(truth)];
  return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::column_total(StageLabel predicted) const {
  std::size_t n = 0;
  for (const auto& row : cells_) n += row[col_of(predicted)];
  return n;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (StageLabel s : kStages) n += row_total(s);
  return n;
}

std::vector<StageLabel> ConfusionMatrix::columns() const {
  std::vector<StageLabel> cols;
  if (has_rop_free_) cols.push_back(StageLabel::RopFree);
  cols.insert(cols.end(), std::begin(kStages), std::end(kStages));
  return cols;
}

ordered_json ConfusionMatrix::to_json() const {
  ordered_json labels = ordered_json::array();
  for (StageLabel s : kStages) labels.push_back(stage_number(s));
  ordered_json counts = ordered_json::array();
  ordered_json rop_free = ordered_json::array();
  for (const auto& row : cells_) {
    counts.push_back({row[1], row[2], row[3]});
    rop_free.push_back(row[0]);
  }
  ordered_json j = {{"labels", labels}, {"counts", counts}};
  if (has_rop_free_) j["rop_free"] = rop_free;
  return j;
}

ConfusionMatrix ConfusionMatrix::from_json(const ordered_json& j) {
  try {
    std::array<std::array<std::size_t, 3>, 3> counts{};
    const auto& rows = j.at("counts");
    if (rows.size() != 3) throw Error("confusion matrix needs 3 rows");
    for (std::size_t t = 0; t < 3; ++t) {
      if (rows[t].size() != 3) throw Error("confusion matrix rows need 3 columns");
      for (std::size_t p = 0; p < 3; ++p) counts[t][p] = rows[t][p].get<std::size_t>();
    }
    std::optional<std::array<std::size_t, 3>> rop_free;
    if (auto it = j.find("rop_free"); it != j.end()) {
      if (it->size() != 3) throw Error("rop_free column needs 3 entries");
      rop_free = std::array<std::size_t, 3>{(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>(),
                                            (*it)[2].get<std::size_t>()};
    }
    return from_counts(counts, rop_free);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid confusion matrix: ") + e.what());
  }
}

MetricsReport report(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.matrix = cm;
  for (StageLabel s : kStages) {
    ClassStats c;
    c.stage = s;
    c.correct = cm.count(s, s);
    c.predicted = cm.column_total(s);
    c.actual = cm.row_total(s);
    c.precision = c.predicted == 0 ? 0.0 : static_cast<double>(c.correct) / c.predicted;
    c.recall = c.actual == 0 ? 0.0 : static_cast<double>(c.correct) / c.actual;
    c.f1 = c.precision + c.recall == 0.0 ? 0.0
                                         : 2.0 * c.precision * c.recall / (c.precision + c.recall);
    r.correct += c.correct;
    r.classes.push_back(c);
  }
  r.total = cm.total();
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / r.total;
  return r;
}

ordered_json MetricsReport::to_json() const {
  ordered_json cls = ordered_json::array();
  for (const auto& c : classes) {
    cls.push_back({{"stage", stage_number(c.stage)},
                   {"precision", c.precision},
                   {"recall", c.recall},
                   {"f1", c.f1},
                   {"correct", c.correct},
                   {"predicted", c.predicted},
                   {"actual", c.actual}});
  }
  return {{"classes", cls},
          {"accuracy", accuracy},
          {"correct", correct},
          {"total", total},
          {"confusion_matrix", matrix.to_json()}};
}

void print_matrix(std::ostream& os, const ConfusionMatrix& cm) {
  os << std::setw(10) << "true\\pred";
  for (StageLabel c : cm.columns()) os << std::setw(10) << stage_name(c);
  os << '\n';
  for (StageLabel t : kStages) {
    os << std::setw(10) << stage_name(t);
    for (StageLabel c : cm.columns()) os << std::setw(10) << cm.count(t, c);
    os << '\n';
  }
}

void print_report(std::ostream& os, const MetricsReport& r) {
  const auto old_flags = os.flags();
  const auto old_precision = os.precision();
  os << std::fixed << std::setprecision(2);
  os << std::setw(10) << "" << std::setw(11) << "Precision" << std::setw(8) << "Recall"
     << std::setw(10) << "F1-Score" << '\n';
  for (const auto& c : r.classes) {
    os << std::setw(10) << stage_name(c.stage) << std::setw(11) << c.precision << std::setw(8)
       << c.recall << std::setw(10) << c.f1 << '\n';
  }
  os << std::setw(10) << "Accuracy" << std::setw(11) << r.accuracy << "  (" << r.correct << "/"
     << r.total << ")\n";
  os.flags(old_flags);
  os.precision(old_precision);
}

void write_pr_csv(std::ostream& os, const PrCurve& curve) {
  const auto old_precision = os.precision();
  os << std::setprecision(17);
  os << "confidence,precision,recall\n";
  for (const auto& p : curve.points) os << p.confidence << ',' << p.precision << ',' << p.recall << '\n';
  os.precision(old_precision);
}

ordered_json pr_curve_json(const PrCurve& curve) {
  ordered_json pts = ordered_json::array();
  for (const auto& p : curve.points) {
    pts.push_back({{"confidence", p.confidence}, {"precision", p.precision}, {"recall", p.recall}});
  }
  return {{"num_ground_truth", curve.num_ground_truth}, {"points", pts}};
}

}  // namespace rop
