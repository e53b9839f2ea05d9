#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "rop/dataset.hpp"
#include "rop/detect.hpp"
#include "rop/enhance.hpp"
#include "rop/metrics.hpp"

namespace rop {

inline constexpr const char* kVersion = "ropstage 1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  ///< some records failed; the rest were processed
inline constexpr int kExitConfig = 2;   ///< configuration, input or parse error

enum class EvalMode { Stage, Detection, Both };

struct PipelineConfig {
  std::uint64_t seed = 2019;
  ClaheParams clahe;
  SplitRatios ratios;
  StageLabel augment_stage = StageLabel::Stage1;
  int augment_factor = 5;
  BackendConfig backend;
  int image_size = 299;
  std::string stage_key = "stage";
  double iou_threshold = 0.5;
  ApMethod ap_method = ApMethod::AllPoint;
  EvalMode eval_mode = EvalMode::Both;
  unsigned workers = 0;  ///< 0 = hardware concurrency

  std::filesystem::path images_dir;
  std::filesystem::path via_json;
  std::filesystem::path manifest;     ///< default: <output_dir>/manifest.json
  std::filesystem::path output_dir;
  std::filesystem::path predictions;  ///< evaluate input; default: <output_dir>/predictions
  std::vector<std::filesystem::path> matrices;  ///< `report` inputs

  std::filesystem::path manifest_path() const;
  std::filesystem::path predictions_path() const;

  /// Everything that influences results; paths and worker count excluded.
  nlohmann::ordered_json parameters() const;
  /// FNV-1a 64 of parameters().dump(), as 16 hex digits.
  std::string hash() const;
};

/// Applies the keys present in `doc` on top of `base`. Throws rop::Error.
PipelineConfig config_from_json(const nlohmann::ordered_json& doc, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
nlohmann::ordered_json config_to_json(const PipelineConfig& config);

/// Streams for command output. Commands never write to std::cout directly.
struct Console {
  std::ostream& out;
  std::ostream& err;
};

int cmd_build(const PipelineConfig& config, Console io);
int cmd_preprocess(const PipelineConfig& config, Console io);
int cmd_predict(const PipelineConfig& config, Console io);
int cmd_evaluate(const PipelineConfig& config, Console io);
/// Statistics for confusion-matrix JSON files (config.matrices).
int cmd_report(const PipelineConfig& config, Console io);

/// Runs fn(0..count-1) on up to `workers` threads. fn must not throw.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Filesystem-safe file stem for a record id.
std::string record_file_stem(const std::string& id);

// ---------------------------------------------------------------------------
// Synthetic fixtures: small fundus-like RGB images with a painted ridge and a
// VIA export whose polygons enclose it.

struct FixtureOptions {
  int per_stage = 10;
  int width = 96;
  int height = 72;
  std::uint64_t seed = 7;
  std::string stage_key = "stage";
};

/// Writes <dir>/images/*.png and <dir>/via.json. Returns the number of images.
int generate_fixtures(const std::filesystem::path& dir, const FixtureOptions& opts);

}  // namespace rop
