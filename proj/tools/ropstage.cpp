// ropstage: command-line driver for the ROP staging pipeline.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "rop/error.hpp"
#include "rop/pipeline.hpp"

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> images, via, manifest, out, predictions;
  std::optional<std::string> backend, sidecars, mode, ap_method, stage_key;
  std::optional<double> threshold, clip_limit, iou;
  std::optional<int> tiles_x, tiles_y, aug_factor, aug_stage, size;
  std::optional<unsigned> workers;
  std::vector<std::string> matrices;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file (default: $ROPSTAGE_CONFIG)");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--images", o.images, "Source image directory");
  cmd->add_option("--via", o.via, "VIA annotation export");
  cmd->add_option("--manifest", o.manifest, "Manifest path (default <out>/manifest.json)");
  cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("--tiles-x", o.tiles_x, "CLAHE tiles across");
  cmd->add_option("--tiles-y", o.tiles_y, "CLAHE tiles down");
  cmd->add_option("--clip-limit", o.clip_limit, "CLAHE clip limit");
  cmd->add_option("--size", o.size, "Materialized image side length");
  cmd->add_option("-j,--workers", o.workers, "Worker threads (0 = all cores)");
}

int run(rop::PipelineConfig base, const Overrides& o, int (*command)(const rop::PipelineConfig&, rop::Console)) {
  rop::PipelineConfig c = std::move(base);
  std::optional<std::string> config_path = o.config;
  if (!config_path) {
    if (const char* env = std::getenv("ROPSTAGE_CONFIG"); env && *env) config_path = env;
  }
  try {
    if (config_path) c = rop::load_config(*config_path, c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rop::kExitConfig;
  }
  if (o.seed) c.seed = *o.seed;
  if (o.images) c.images_dir = *o.images;
  if (o.via) c.via_json = *o.via;
  if (o.manifest) c.manifest = *o.manifest;
  if (o.out) c.output_dir = *o.out;
  if (o.predictions) c.predictions = *o.predictions;
  if (o.sidecars) c.backend.file_dir = *o.sidecars;
  if (o.threshold) c.backend.confidence_threshold = *o.threshold;
  if (o.clip_limit) c.clahe.clip_limit = *o.clip_limit;
  if (o.tiles_x) c.clahe.tiles_x = *o.tiles_x;
  if (o.tiles_y) c.clahe.tiles_y = *o.tiles_y;
  if (o.aug_factor) c.augment_factor = *o.aug_factor;
  if (o.size) c.image_size = *o.size;
  if (o.iou) c.iou_threshold = *o.iou;
  if (o.workers) c.workers = *o.workers;
  if (o.stage_key) c.stage_key = *o.stage_key;
  if (o.aug_stage) {
    const auto s = rop::stage_from_number(*o.aug_stage);
    if (!s) {
      std::cerr << "error: --aug-stage must be 1, 2 or 3\n";
      return rop::kExitConfig;
    }
    c.augment_stage = *s;
  }
  if (o.backend) c.backend.kind = *rop::backend_from_name(*o.backend);
  if (o.mode) {
    c.eval_mode = *o.mode == "stage" ? rop::EvalMode::Stage
                  : *o.mode == "detection" ? rop::EvalMode::Detection
                                           : rop::EvalMode::Both;
  }
  if (o.ap_method) c.ap_method = *o.ap_method == "trapezoid" ? rop::ApMethod::Trapezoid : rop::ApMethod::AllPoint;
  for (const auto& m : o.matrices) c.matrices.emplace_back(m);
  return command(c, rop::Console{std::cout, std::cerr});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retinopathy-of-prematurity staging pipeline: dataset building, preprocessing, "
               "mask fusion and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rop::kVersion);

  Overrides o;
  int exit_code = rop::kExitOk;
  const rop::PipelineConfig defaults;

  auto* build = app.add_subcommand("build", "Parse VIA annotations, split 6:3:1 and augment into a manifest");
  add_common(build, o);
  build->add_option("--aug-factor", o.aug_factor, "Augmentation factor for the target stage");
  build->add_option("--aug-stage", o.aug_stage, "Stage to augment (1-3)");
  build->add_option("--stage-key", o.stage_key, "VIA region attribute holding the stage");
  build->callback([&] { exit_code = run(defaults, o, rop::cmd_build); });

  auto* pre = app.add_subcommand("preprocess", "Materialize every manifest record as a preprocessed PNG");
  add_common(pre, o);
  pre->callback([&] { exit_code = run(defaults, o, rop::cmd_preprocess); });

  auto* predict = app.add_subcommand("predict", "Run a detection backend on the test split and write fused samples");
  add_common(predict, o);
  predict->add_option("--backend", o.backend, "oracle | null | file")
      ->check(CLI::IsMember({"oracle", "null", "file"}));
  predict->add_option("--sidecars", o.sidecars, "Directory of <stem>.pred.json files (file backend)");
  predict->add_option("--threshold", o.threshold, "Detection confidence threshold")->check(CLI::Range(0.0, 1.0));
  predict->callback([&] { exit_code = run(defaults, o, rop::cmd_predict); });

  auto* eval = app.add_subcommand("evaluate", "Score test-split predictions (stage and/or detection metrics)");
  add_common(eval, o);
  eval->add_option("--predictions", o.predictions, "Prediction sidecar directory (default <out>/predictions)");
  eval->add_option("--mode", o.mode, "stage | detection | both")->check(CLI::IsMember({"stage", "detection", "both"}));
  eval->add_option("--ap-method", o.ap_method, "all-point | trapezoid")
      ->check(CLI::IsMember({"all-point", "trapezoid"}));
  eval->add_option("--iou", o.iou, "IoU threshold (strict)")->check(CLI::Range(0.0, 1.0));
  eval->callback([&] { exit_code = run(defaults, o, rop::cmd_evaluate); });

  auto* rep = app.add_subcommand("report", "Precision/recall/F1/accuracy from confusion-matrix JSON files");
  rep->add_option("matrices", o.matrices, "Confusion matrix files")->required();
  rep->add_option("-o,--out", o.out, "Directory for report.json");
  rep->callback([&] { exit_code = run(defaults, o, rop::cmd_report); });

  rop::FixtureOptions fx;
  std::string fx_dir;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic fixture set (images + VIA export)");
  synth->add_option("dir", fx_dir, "Output directory")->required();
  synth->add_option("--per-stage", fx.per_stage, "Images per stage");
  synth->add_option("--width", fx.width, "Image width");
  synth->add_option("--height", fx.height, "Image height");
  synth->add_option("--seed", fx.seed, "Generator seed");
  synth->callback([&] {
    try {
      const int n = rop::generate_fixtures(fx_dir, fx);
      std::cout << "wrote " << n << " fixture images to " << fx_dir << '\n';
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      exit_code = rop::kExitConfig;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rop::kExitConfig;
  }
  return exit_code;
}
