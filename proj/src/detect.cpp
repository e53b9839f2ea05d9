#include "rop/detect.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rop/error.hpp"

namespace rop {

using ordered_json = nlohmann::ordered_json;

std::string_view backend_name(BackendKind k) noexcept {
  switch (k) {
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Null: return "null";
    case BackendKind::File: return "file";
  }
  return "?";
}

std::optional<BackendKind> backend_from_name(std::string_view name) noexcept {
  for (BackendKind k : {BackendKind::Oracle, BackendKind::Null, BackendKind::File}) {
    if (backend_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

class OracleBackend final : public DetectionBackend {
 public:
  std::vector<Detection> predict(const SampleRecord& record, const GrayImage& img) const override {
    auto masks = ground_truth_masks(record, img.width(), img.height());
    std::vector<Detection> out;
    out.reserve(masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
      out.push_back({std::move(masks[i]), record.polygons[i].stage, 1.0});
    }
    return out;
  }
};

class NullBackend final : public DetectionBackend {
 public:
  std::vector<Detection> predict(const SampleRecord&, const GrayImage&) const override { return {}; }
};

class FileBackend final : public DetectionBackend {
 public:
  FileBackend(std::filesystem::path dir, double threshold)
      : dir_(std::move(dir)), threshold_(threshold) {}

  std::vector<Detection> predict(const SampleRecord& record, const GrayImage& img) const override {
    const auto path = sidecar_path(dir_, record);
    if (!std::filesystem::exists(path)) {
      throw IoError("record '" + record.id + "': missing prediction file '" + path.string() + "'");
    }
    std::vector<Detection> dets;
    try {
      dets = read_sidecar(path);
    } catch (const ParseError& e) {
      throw ParseError("record '" + record.id + "': " + e.what(), e.offset());
    } catch (const Error& e) {
      throw Error("record '" + record.id + "': " + e.what());
    }
    for (const auto& d : dets) {
      if (d.mask.width() != img.width() || d.mask.height() != img.height()) {
        throw DimensionMismatch("record '" + record.id + "': prediction mask is " +
                                std::to_string(d.mask.width()) + "x" +
                                std::to_string(d.mask.height()) + ", image is " +
                                std::to_string(img.width()) + "x" + std::to_string(img.height()));
      }
    }
    return filter_by_confidence(std::move(dets), threshold_);
  }

 private:
  std::filesystem::path dir_;
  double threshold_;
};

}  // namespace

std::unique_ptr<DetectionBackend> make_backend(const BackendConfig& config) {
  if (!(config.confidence_threshold >= 0.0 && config.confidence_threshold <= 1.0)) {
    throw std::invalid_argument("confidence threshold must lie in [0, 1]");
  }
  switch (config.kind) {
    case BackendKind::Oracle: return std::make_unique<OracleBackend>();
    case BackendKind::Null: return std::make_unique<NullBackend>();
    case BackendKind::File:
      if (config.file_dir.empty()) throw std::invalid_argument("file backend needs a sidecar directory");
      return std::make_unique<FileBackend>(config.file_dir, config.confidence_threshold);
  }
  throw std::invalid_argument("unknown backend kind");
}

// ---------------------------------------------------------------------------

std::filesystem::path sidecar_path(const std::filesystem::path& dir, const SampleRecord& record) {
  return dir / (std::filesystem::path(record.source_path).stem().string() + ".pred.json");
}

std::vector<Detection> parse_sidecar(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed prediction file: ") + e.what(), e.byte);
  }
  std::vector<Detection> out;
  try {
    for (const auto& j : doc.at("detections")) {
      const auto stage = stage_from_number(j.at("stage").get<long>());
      if (!stage) throw Error("detection stage must be 1, 2 or 3, got " + j.at("stage").dump());
      const double conf = j.at("confidence").get<double>();
      if (!(conf >= 0.0 && conf <= 1.0)) throw Error("detection confidence outside [0, 1]");
      const auto& m = j.at("mask");
      RleMask rle{m.at("width").get<int>(), m.at("height").get<int>(),
                  m.at("runs").get<std::vector<std::uint32_t>>()};
      BinaryMask mask;
      try {
        mask = rle_decode(rle);
      } catch (const std::invalid_argument& e) {
        throw Error(std::string("bad mask: ") + e.what());
      }
      out.push_back({std::move(mask), *stage, conf});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid prediction file: ") + e.what());
  }
  return out;
}

std::string format_sidecar(const std::vector<Detection>& detections) {
  ordered_json list = ordered_json::array();
  for (const auto& d : detections) {
    const RleMask rle = rle_encode(d.mask);
    list.push_back({{"stage", stage_number(d.stage)},
                    {"confidence", d.confidence},
                    {"mask", {{"width", rle.width}, {"height", rle.height}, {"runs", rle.runs}}}});
  }
  return ordered_json{{"detections", std::move(list)}}.dump() + "\n";
}

std::vector<Detection> read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_sidecar(text.str());
}

void write_sidecar(const std::filesystem::path& path, const std::vector<Detection>& detections) {
  std::ofstream out(path, std::ios::trunc);
  out << format_sidecar(detections);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::vector<Detection> filter_by_confidence(std::vector<Detection> dets, double threshold) {
  std::erase_if(dets, [&](const Detection& d) { return d.confidence < threshold; });
  return dets;
}

// ---------------------------------------------------------------------------

BinaryMask detections_union(const std::vector<Detection>& dets, int width, int height) {
  BinaryMask acc(width, height);
  for (const auto& d : dets) acc = mask_union(acc, d.mask);
  return acc;
}

StagePrediction extract_stage(const std::vector<Detection>& dets) {
  StagePrediction pred;
  for (StageLabel s : kStages) pred.per_stage_area[s] = 0;
  if (dets.empty()) return pred;

  const int w = dets.front().mask.width();
  const int h = dets.front().mask.height();
  for (const auto& d : dets) {
    if (d.mask.width() != w || d.mask.height() != h) {
      throw DimensionMismatch("detection masks have different dimensions");
    }
  }
  std::size_t best = 0;
  for (StageLabel s : kStages) {
    BinaryMask acc(w, h);
    for (const auto& d : dets) {
      if (d.stage == s) acc = mask_union(acc, d.mask);
    }
    const std::size_t area = mask_area(acc);
    pred.per_stage_area[s] = area;
    if (area > best) {
      best = area;
      pred.stage = s;
    }
  }
  return pred;
}

}  // namespace rop
