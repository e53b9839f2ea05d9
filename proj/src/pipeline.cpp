#include "rop/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "rop/error.hpp"
#include "rop/png_io.hpp"

namespace rop {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

fs::path PipelineConfig::manifest_path() const {
  return manifest.empty() ? output_dir / "manifest.json" : manifest;
}

fs::path PipelineConfig::predictions_path() const {
  return predictions.empty() ? output_dir / "predictions" : predictions;
}

namespace {

std::string_view ap_method_name(ApMethod m) {
  return m == ApMethod::AllPoint ? "all-point" : "trapezoid";
}

std::string_view eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::Stage: return "stage";
    case EvalMode::Detection: return "detection";
    case EvalMode::Both: return "both";
  }
  return "?";
}

template <typename T>
void read_if(const ordered_json& j, const char* key, T& target) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) target = it->get<T>();
}

void read_path(const ordered_json& j, const char* key, fs::path& target) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) target = it->get<std::string>();
}

}  // namespace

ordered_json PipelineConfig::parameters() const {
  return {{"seed", seed},
          {"clahe", {{"tiles_x", clahe.tiles_x}, {"tiles_y", clahe.tiles_y}, {"clip_limit", clahe.clip_limit}}},
          {"split", {{"train", ratios.train}, {"test", ratios.test}, {"validation", ratios.validation}}},
          {"augmentation", {{"stage", stage_number(augment_stage)}, {"factor", augment_factor}}},
          {"backend", {{"kind", backend_name(backend.kind)}, {"confidence_threshold", backend.confidence_threshold}}},
          {"image_size", image_size},
          {"stage_key", stage_key},
          {"evaluation", {{"iou_threshold", iou_threshold}, {"ap_method", ap_method_name(ap_method)}, {"mode", eval_mode_name(eval_mode)}}}};
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : parameters().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig config_from_json(const ordered_json& doc, PipelineConfig c) {
  try {
    if (!doc.is_object()) throw Error("configuration must be a JSON object");
    static constexpr std::string_view kKnown[] = {"seed",       "clahe",     "split",   "augmentation",
                                                  "backend",    "image_size", "stage_key", "workers",
                                                  "evaluation", "paths"};
    for (const auto& [key, value] : doc.items()) {
      if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
        throw Error("unknown configuration key '" + key + "'");
      }
    }
    read_if(doc, "seed", c.seed);
    if (auto it = doc.find("clahe"); it != doc.end()) {
      read_if(*it, "tiles_x", c.clahe.tiles_x);
      read_if(*it, "tiles_y", c.clahe.tiles_y);
      read_if(*it, "clip_limit", c.clahe.clip_limit);
    }
    if (auto it = doc.find("split"); it != doc.end()) {
      read_if(*it, "train", c.ratios.train);
      read_if(*it, "test", c.ratios.test);
      read_if(*it, "validation", c.ratios.validation);
    }
    if (auto it = doc.find("augmentation"); it != doc.end()) {
      if (auto s = it->find("stage"); s != it->end()) {
        const auto stage = stage_from_number(s->get<long>());
        if (!stage) throw Error("augmentation.stage must be 1, 2 or 3");
        c.augment_stage = *stage;
      }
      read_if(*it, "factor", c.augment_factor);
    }
    if (auto it = doc.find("backend"); it != doc.end()) {
      if (auto k = it->find("kind"); k != it->end()) {
        const auto kind = backend_from_name(k->get<std::string>());
        if (!kind) throw Error("backend.kind must be oracle, null or file");
        c.backend.kind = *kind;
      }
      read_if(*it, "confidence_threshold", c.backend.confidence_threshold);
      read_path(*it, "file_dir", c.backend.file_dir);
    }
    read_if(doc, "image_size", c.image_size);
    read_if(doc, "stage_key", c.stage_key);
    read_if(doc, "workers", c.workers);
    if (auto it = doc.find("evaluation"); it != doc.end()) {
      read_if(*it, "iou_threshold", c.iou_threshold);
      if (auto m = it->find("ap_method"); m != it->end()) {
        const auto name = m->get<std::string>();
        if (name == "all-point") c.ap_method = ApMethod::AllPoint;
        else if (name == "trapezoid") c.ap_method = ApMethod::Trapezoid;
        else throw Error("evaluation.ap_method must be all-point or trapezoid");
      }
      if (auto m = it->find("mode"); m != it->end()) {
        const auto name = m->get<std::string>();
        if (name == "stage") c.eval_mode = EvalMode::Stage;
        else if (name == "detection") c.eval_mode = EvalMode::Detection;
        else if (name == "both") c.eval_mode = EvalMode::Both;
        else throw Error("evaluation.mode must be stage, detection or both");
      }
    }
    if (auto it = doc.find("paths"); it != doc.end()) {
      read_path(*it, "images", c.images_dir);
      read_path(*it, "via", c.via_json);
      read_path(*it, "manifest", c.manifest);
      read_path(*it, "output", c.output_dir);
      read_path(*it, "predictions", c.predictions);
      if (auto m = it->find("matrices"); m != it->end()) {
        c.matrices.clear();
        for (const auto& p : *m) c.matrices.emplace_back(p.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config '" + path.string() + "': " + e.what(), e.byte);
  }
  PipelineConfig c = config_from_json(doc, std::move(base));
  // relative paths in a config file are relative to the file
  const fs::path dir = path.parent_path();
  for (fs::path* p : {&c.images_dir, &c.via_json, &c.manifest, &c.output_dir, &c.predictions,
                      &c.backend.file_dir}) {
    if (!p->empty() && p->is_relative()) *p = dir / *p;
  }
  for (auto& p : c.matrices) {
    if (p.is_relative()) p = dir / p;
  }
  return c;
}

ordered_json config_to_json(const PipelineConfig& c) {
  ordered_json j = c.parameters();
  j["backend"]["file_dir"] = c.backend.file_dir.string();
  j["workers"] = c.workers;
  ordered_json matrices = ordered_json::array();
  for (const auto& m : c.matrices) matrices.push_back(m.string());
  j["paths"] = {{"images", c.images_dir.string()},
                {"via", c.via_json.string()},
                {"manifest", c.manifest.string()},
                {"output", c.output_dir.string()},
                {"predictions", c.predictions.string()},
                {"matrices", matrices}};
  return j;
}

// ---------------------------------------------------------------------------
// Shared helpers

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

std::string record_file_stem(const std::string& id) {
  std::string out = id;
  for (char& ch : out) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                    ch == '-' || ch == '_' || ch == '.';
    if (!ok) ch = '_';
  }
  return out;
}

namespace {

class ConfigError : public Error {
 public:
  using Error::Error;
};

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string(what) + " path is not set");
  if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " '" + p.string() + "' does not exist");
}

void require_dir(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string(what) + " path is not set");
  if (!fs::is_directory(p)) throw ConfigError(std::string(what) + " '" + p.string() + "' is not a directory");
}

void validate_parameters(const PipelineConfig& c) {
  if (c.image_size < 1) throw ConfigError("image_size must be positive");
  if (c.clahe.tiles_x < 1 || c.clahe.tiles_y < 1 || !(c.clahe.clip_limit > 0.0)) {
    throw ConfigError("invalid CLAHE parameters");
  }
  if (c.augment_factor < 1) throw ConfigError("augmentation factor must be >= 1");
  if (!(c.backend.confidence_threshold >= 0.0 && c.backend.confidence_threshold <= 1.0)) {
    throw ConfigError("confidence threshold must lie in [0, 1]");
  }
  if (!(c.iou_threshold >= 0.0 && c.iou_threshold <= 1.0)) throw ConfigError("IoU threshold must lie in [0, 1]");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

ordered_json provenance(const PipelineConfig& c) {
  return {{"created_by", kVersion}, {"config_hash", c.hash()}, {"parameters", c.parameters()}};
}

// Runs `body`, mapping configuration problems to exit code 2.
template <typename Body>
int guarded(Console io, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << '\n';
  } catch (const ParseError& e) {
    io.err << "parse error: " << e.what() << '\n';
  } catch (const AnnotationError& e) {
    io.err << "annotation error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
  }
  return kExitConfig;
}

struct Failure {
  std::string id;
  std::string message;
};

int report_failures(Console io, const std::vector<Failure>& failures, const char* what) {
  if (failures.empty()) return kExitOk;
  io.err << failures.size() << " record(s) failed during " << what << ":\n";
  for (const auto& f : failures) io.err << "  " << f.id << ": " << f.message << '\n';
  return kExitPartial;
}

std::vector<const SampleRecord*> test_records(const DatasetManifest& m) {
  std::vector<const SampleRecord*> out;
  for (const auto& r : m.records) {
    if (r.split == Split::Test) out.push_back(&r);
  }
  return out;
}

fs::path preprocessed_path(const PipelineConfig& c, const SampleRecord& r) {
  return c.output_dir / "preprocessed" / (record_file_stem(r.id) + ".png");
}

}  // namespace

// ---------------------------------------------------------------------------
// build

int cmd_build(const PipelineConfig& config, Console io) {
  return guarded(io, [&] {
    validate_parameters(config);
    require_file(config.via_json, "VIA annotation file");
    require_dir(config.images_dir, "image directory");
    if (config.output_dir.empty() && config.manifest.empty()) throw ConfigError("output path is not set");

    std::ifstream in(config.via_json);
    std::ostringstream text;
    text << in.rdbuf();
    const auto images = parse_via(text.str(), ViaOptions{config.stage_key});

    std::vector<SampleRecord> records;
    std::vector<std::string> missing;
    std::map<std::string, std::string> seen_ids;
    for (const auto& image : images) {
      if (image.polygons.empty()) {
        io.err << "warning: '" << image.filename << "' has no annotated polygons; skipped\n";
        continue;
      }
      SampleRecord r;
      r.source_path = image.filename;
      r.id = record_file_stem(fs::path(image.filename).stem().string());
      if (auto [it, fresh] = seen_ids.emplace(r.id, image.filename); !fresh) {
        throw ConfigError("images '" + it->second + "' and '" + image.filename + "' map to the same record id");
      }
      r.polygons = image.polygons;
      r.stage = image.polygons.front().stage;
      for (const auto& p : image.polygons) {
        if (p.stage != r.stage) {
          r.stage = std::max(r.stage, p.stage);
          io.err << "warning: '" << image.filename << "' mixes stages; labelled as the most severe\n";
        }
      }
      const fs::path src = config.images_dir / image.filename;
      if (!fs::is_regular_file(src)) {
        missing.push_back(src.string());
        continue;
      }
      const auto size = png::read_size(src);
      r.source_width = size.width;
      r.source_height = size.height;
      records.push_back(std::move(r));
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += "\n  " + m;
      throw ConfigError("annotated images not found:" + list);
    }
    if (records.empty()) throw ConfigError("no annotated images to build a dataset from");

    DatasetManifest manifest = split(std::move(records), config.ratios, config.seed);
    const CountTable before = count_table(manifest);
    manifest = augment_class(std::move(manifest), config.augment_stage, config.augment_factor, config.seed);
    check_group_integrity(manifest);
    manifest.created_by = kVersion;
    manifest.parameters = config.parameters();
    manifest.parameters["config_hash"] = config.hash();

    const fs::path out = config.manifest_path();
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_manifest(manifest, out);

    print_count_table(io.out, before, count_table(manifest));
    io.out << "wrote " << manifest.records.size() << " records to " << out.string() << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// preprocess

int cmd_preprocess(const PipelineConfig& config, Console io) {
  return guarded(io, [&] {
    validate_parameters(config);
    require_file(config.manifest_path(), "manifest");
    require_dir(config.images_dir, "image directory");
    const DatasetManifest manifest = read_manifest(config.manifest_path());
    const fs::path dir = config.output_dir / "preprocessed";
    fs::create_directories(dir);

    const MaterializeOptions opts{config.images_dir, config.clahe, config.image_size};
    std::vector<std::optional<std::string>> errors(manifest.records.size());
    parallel_for(manifest.records.size(), config.workers, [&](std::size_t i) {
      const SampleRecord& r = manifest.records[i];
      try {
        png::write(preprocessed_path(config, r), materialize(r, opts));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });

    std::vector<Failure> failures;
    ordered_json outputs = ordered_json::array();
    for (std::size_t i = 0; i < errors.size(); ++i) {
      const SampleRecord& r = manifest.records[i];
      if (errors[i]) {
        failures.push_back({r.id, *errors[i]});
      } else {
        outputs.push_back({{"id", r.id}, {"file", preprocessed_path(config, r).filename().string()}});
      }
    }
    ordered_json log = provenance(config);
    log["outputs"] = std::move(outputs);
    ordered_json failed = ordered_json::array();
    for (const auto& f : failures) failed.push_back({{"id", f.id}, {"error", f.message}});
    log["failures"] = std::move(failed);
    write_text(config.output_dir / "preprocess_log.json", log.dump(2) + "\n");

    io.out << "preprocessed " << manifest.records.size() - failures.size() << "/"
           << manifest.records.size() << " records into " << dir.string() << '\n';
    return report_failures(io, failures, "preprocessing");
  });
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const PipelineConfig& config, Console io) {
  return guarded(io, [&] {
    validate_parameters(config);
    require_file(config.manifest_path(), "manifest");
    if (config.backend.kind == BackendKind::File) require_dir(config.backend.file_dir, "prediction sidecar directory");
    const DatasetManifest manifest = read_manifest(config.manifest_path());
    const auto backend = make_backend(config.backend);
    const auto records = test_records(manifest);
    const fs::path fused_dir = config.output_dir / "fused";
    const fs::path pred_dir = config.output_dir / "predictions";
    fs::create_directories(fused_dir);
    fs::create_directories(pred_dir);

    const MaterializeOptions opts{config.images_dir, config.clahe, config.image_size};
    struct Outcome {
      std::optional<std::string> error;
      std::size_t detections = 0;
      StageLabel predicted = StageLabel::RopFree;
    };
    std::vector<Outcome> outcomes(records.size());
    parallel_for(records.size(), config.workers, [&](std::size_t i) {
      const SampleRecord& r = *records[i];
      try {
        GrayImage img;
        const fs::path cached = preprocessed_path(config, r);
        if (fs::is_regular_file(cached)) img = png::read_gray(cached);
        if (img.width() != config.image_size || img.height() != config.image_size) {
          img = materialize(r, opts);
        }
        const auto dets = backend->predict(r, img);
        write_fused(fuse(img, detections_union(dets, img.width(), img.height())),
                    fused_dir / (record_file_stem(r.id) + ".ropf"));
        write_sidecar(sidecar_path(pred_dir, r), dets);
        outcomes[i].detections = dets.size();
        outcomes[i].predicted = extract_stage(dets).stage;
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    });

    std::vector<Failure> failures;
    ordered_json entries = ordered_json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (outcomes[i].error) {
        failures.push_back({records[i]->id, *outcomes[i].error});
        continue;
      }
      entries.push_back({{"id", records[i]->id},
                         {"detections", outcomes[i].detections},
                         {"predicted_stage", stage_number(outcomes[i].predicted)}});
    }
    ordered_json log = provenance(config);
    log["records"] = std::move(entries);
    write_text(config.output_dir / "predict_log.json", log.dump(2) + "\n");

    io.out << "predicted " << records.size() - failures.size() << "/" << records.size()
           << " test records with the " << backend_name(config.backend.kind) << " backend\n";
    return report_failures(io, failures, "prediction");
  });
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const PipelineConfig& config, Console io) {
  return guarded(io, [&] {
    validate_parameters(config);
    require_file(config.manifest_path(), "manifest");
    require_dir(config.predictions_path(), "predictions directory");
    const DatasetManifest manifest = read_manifest(config.manifest_path());
    const auto records = test_records(manifest);
    if (records.empty()) throw ConfigError("manifest has no test records");

    std::vector<std::string> absent;
    for (const auto* r : records) {
      if (!fs::is_regular_file(sidecar_path(config.predictions_path(), *r))) absent.push_back(r->id);
    }
    if (!absent.empty()) {
      io.err << "missing predictions for " << absent.size() << " record(s):\n";
      for (const auto& id : absent) io.err << "  " << id << '\n';
      return kExitPartial;
    }

    const int size = config.image_size;
    std::vector<std::pair<StageLabel, StageLabel>> pairs;
    std::vector<MatchResult> matches;
    std::size_t num_gt = 0;
    std::vector<Failure> failures;
    for (const auto* r : records) {
      try {
        const auto dets = read_sidecar(sidecar_path(config.predictions_path(), *r));
        for (const auto& d : dets) {
          if (d.mask.width() != size || d.mask.height() != size) {
            throw DimensionMismatch("prediction mask is not " + std::to_string(size) + "x" + std::to_string(size));
          }
        }
        if (config.eval_mode != EvalMode::Detection) pairs.emplace_back(r->stage, extract_stage(dets).stage);
        if (config.eval_mode != EvalMode::Stage) {
          const auto gts = ground_truth_masks(*r, size, size);
          num_gt += gts.size();
          for (const auto& m : match_detections(dets, gts, config.iou_threshold)) matches.push_back(m);
        }
      } catch (const std::exception& e) {
        failures.push_back({r->id, e.what()});
      }
    }
    if (!failures.empty()) return report_failures(io, failures, "evaluation");

    const fs::path dir = config.output_dir / "eval";
    fs::create_directories(dir);
    ordered_json doc = provenance(config);
    doc["test_records"] = records.size();
    std::ostringstream text;

    if (config.eval_mode != EvalMode::Detection) {
      const MetricsReport rep = report(ConfusionMatrix::from_pairs(pairs));
      doc["stage"] = rep.to_json();
      text << "Stage classification (" << records.size() << " test images)\n";
      print_matrix(text, rep.matrix);
      text << '\n';
      print_report(text, rep);
    }
    if (config.eval_mode != EvalMode::Stage) {
      const PrCurve curve = pr_curve(matches, num_gt);
      const double ap = average_precision(curve, config.ap_method);
      const auto tp = static_cast<std::size_t>(
          std::count_if(matches.begin(), matches.end(), [](const MatchResult& m) { return m.true_positive; }));
      doc["detection"] = {{"average_precision", ap},
                          {"ap_method", ap_method_name(config.ap_method)},
                          {"iou_threshold", config.iou_threshold},
                          {"detections", matches.size()},
                          {"true_positives", tp},
                          {"pr_curve", pr_curve_json(curve)}};
      std::ofstream csv(dir / "pr_curve.csv", std::ios::trunc);
      write_pr_csv(csv, curve);
      if (!csv) throw IoError("cannot write pr_curve.csv");
      if (config.eval_mode == EvalMode::Both) text << '\n';
      char ap_text[32];
      std::snprintf(ap_text, sizeof ap_text, "%.4f", ap);
      text << "Detection: AP " << ap_text << " (" << tp << " TP of " << matches.size()
           << " detections, " << num_gt << " ground truths, IoU > " << config.iou_threshold << ")\n";
    }

    write_text(dir / "report.json", doc.dump(2) + "\n");
    write_text(dir / "report.txt", text.str());
    io.out << text.str();
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const PipelineConfig& config, Console io) {
  return guarded(io, [&] {
    if (config.matrices.empty()) throw ConfigError("no confusion-matrix files given");
    ordered_json all = ordered_json::array();
    for (const auto& path : config.matrices) {
      require_file(path, "confusion matrix");
      std::ifstream in(path);
      ordered_json doc;
      try {
        doc = ordered_json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what(), e.byte);
      }
      const MetricsReport rep = report(ConfusionMatrix::from_json(doc));
      const std::string name = doc.value("name", path.stem().string());
      io.out << "== " << name << " ==\n";
      print_matrix(io.out, rep.matrix);
      io.out << '\n';
      print_report(io.out, rep);
      io.out << '\n';
      ordered_json entry = rep.to_json();
      entry["name"] = name;
      all.push_back(std::move(entry));
    }
    if (!config.output_dir.empty()) {
      fs::create_directories(config.output_dir);
      write_text(config.output_dir / "report.json",
                 ordered_json{{"created_by", kVersion}, {"reports", all}}.dump(2) + "\n");
    }
    return kExitOk;
  });
}

}  // namespace rop
