#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string_view>
#include <vector>

#include "rop/annot.hpp"
#include "rop/dataset.hpp"
#include "rop/imgcore.hpp"

namespace rop {

struct Detection {
  BinaryMask mask;
  StageLabel stage = StageLabel::Stage1;
  double confidence = 1.0;
};

enum class BackendKind { Oracle, Null, File };

std::string_view backend_name(BackendKind k) noexcept;
std::optional<BackendKind> backend_from_name(std::string_view name) noexcept;

struct BackendConfig {
  BackendKind kind = BackendKind::Oracle;
  double confidence_threshold = 0.8;
  std::filesystem::path file_dir;  ///< sidecar directory for BackendKind::File
};

/// Stand-in for the segmentation network: maps a materialized record to detections.
class DetectionBackend {
 public:
  virtual ~DetectionBackend() = default;
  virtual std::vector<Detection> predict(const SampleRecord& record, const GrayImage& img) const = 0;
};

/// Validates the config (threshold in [0, 1], File needs a directory).
std::unique_ptr<DetectionBackend> make_backend(const BackendConfig& config);

// ---------------------------------------------------------------------------
// Sidecar prediction files: <image-stem>.pred.json
//   {"detections": [{"stage": 2, "confidence": 0.93,
//                    "mask": {"width": W, "height": H, "runs": [...]}}, ...]}

std::filesystem::path sidecar_path(const std::filesystem::path& dir, const SampleRecord& record);

std::vector<Detection> parse_sidecar(std::string_view json_text);
std::string format_sidecar(const std::vector<Detection>& detections);

std::vector<Detection> read_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const std::vector<Detection>& detections);

std::vector<Detection> filter_by_confidence(std::vector<Detection> dets, double threshold);

// ---------------------------------------------------------------------------

struct StagePrediction {
  StageLabel stage = StageLabel::RopFree;
  std::map<StageLabel, std::size_t> per_stage_area;  ///< union area per stage, Stage1..3
};

/// Union masks per stage and pick the stage with the largest area; ties go to
/// the lower stage; no area at all predicts RopFree.
StagePrediction extract_stage(const std::vector<Detection>& dets);

/// Union of every detection mask; all-zero mask of the given size when empty.
BinaryMask detections_union(const std::vector<Detection>& dets, int width, int height);

}  // namespace rop
