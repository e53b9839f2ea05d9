#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rop/annot.hpp"
#include "rop/enhance.hpp"
#include "rop/imgcore.hpp"

namespace rop {

enum class Split : std::uint8_t { Train = 0, Test = 1, Validation = 2 };

inline constexpr Split kSplits[] = {Split::Train, Split::Test, Split::Validation};

std::string_view split_name(Split s) noexcept;
std::optional<Split> split_from_name(std::string_view name) noexcept;

/// Random perturbation replayed when an augmented record is materialized.
struct Augmentation {
  EdgeCrop crop;
  double zoom = 1.0;
  bool operator==(const Augmentation&) const = default;
};

struct SampleRecord {
  std::string id;
  std::string source_path;  ///< relative to the image root
  StageLabel stage = StageLabel::Stage1;
  Split split = Split::Train;
  std::string group_id;
  bool is_augmented = false;
  std::vector<AnnotatedPolygon> polygons;  ///< in source-image pixel coordinates
  int source_width = 0;
  int source_height = 0;
  std::optional<Augmentation> augmentation;

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  static constexpr int kVersion = 1;

  std::vector<SampleRecord> records;
  std::uint64_t seed = 0;
  std::string created_by;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();

  bool operator==(const DatasetManifest&) const = default;
};

struct SplitRatios {
  unsigned train = 6;
  unsigned test = 3;
  unsigned validation = 1;
};

/// Per-split counts for n items: split k ends at ceil(n * (r_0 + ... + r_k) / sum(r)).
std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios);

/// Per stage: seeded shuffle, then apportion 6:3:1. Output is grouped by
/// stage (1, 2, 3) and then by split. Every record becomes its own group.
DatasetManifest split(std::vector<SampleRecord> records, const SplitRatios& ratios,
                      std::uint64_t seed);

/// Appends factor - 1 perturbed copies after every original Train record of
/// `stage`. Copies share the original's group and split.
DatasetManifest augment_class(DatasetManifest manifest, StageLabel stage, int factor,
                              std::uint64_t seed);

/// Throws rop::Error naming the first group found in more than one split,
/// a duplicated id, or a group without exactly one original record.
void check_group_integrity(const DatasetManifest& manifest);

struct CountTable {
  /// counts[stage - 1][split]
  std::array<std::array<std::size_t, 3>, 3> counts{};
  std::size_t at(StageLabel stage, Split split) const {
    return counts[static_cast<std::size_t>(stage_number(stage) - 1)][static_cast<std::size_t>(split)];
  }
  bool operator==(const CountTable&) const = default;
};

CountTable count_table(const DatasetManifest& manifest);
void print_count_table(std::ostream& os, const CountTable& before, const CountTable& after);

// ---------------------------------------------------------------------------
// Materialization

struct MaterializeOptions {
  std::filesystem::path image_root;
  ClaheParams clahe;
  int output_size = 299;
};

/// grayscale -> equalize -> clahe -> [edge crop -> center zoom] -> resize.
/// `source` is the decoded image at record.source_path.
GrayImage materialize_image(const GrayImage& source, const SampleRecord& record,
                            const MaterializeOptions& opts);

/// Loads the record's source PNG and materializes it. Throws IoError naming the record.
GrayImage materialize(const SampleRecord& record, const MaterializeOptions& opts);

/// Maps source-pixel coordinates into the materialized output frame.
struct FrameMap {
  double offset_x = 0.0;
  double offset_y = 0.0;
  double scale_x = 1.0;
  double scale_y = 1.0;

  Point apply(Point p) const noexcept {
    return {(p.x - offset_x) * scale_x, (p.y - offset_y) * scale_y};
  }
};

FrameMap frame_map(const SampleRecord& record, int output_width, int output_height);

/// Each annotated polygon rasterized in the output frame, in annotation order.
std::vector<BinaryMask> ground_truth_masks(const SampleRecord& record, int output_width,
                                           int output_height);

// ---------------------------------------------------------------------------
// Two-channel samples

struct FusedSample {
  static constexpr int kChannels = 2;

  int width = 0;
  int height = 0;
  std::vector<float> channel0;  ///< standardized intensities
  std::vector<float> channel1;  ///< mask, 0.0 or 1.0

  bool operator==(const FusedSample&) const = default;
};

FusedSample fuse(const GrayImage& img, const BinaryMask& mask);

/// Layout: "ROPF", u16 version, u32 width, u32 height, u8 channels, then
/// each channel row-major as little-endian float32.
std::vector<std::uint8_t> encode_fused(const FusedSample& sample);
FusedSample decode_fused(std::span<const std::uint8_t> bytes);

void write_fused(const FusedSample& sample, const std::filesystem::path& path);
FusedSample read_fused(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Manifest files

nlohmann::ordered_json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::ordered_json& doc);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace rop
