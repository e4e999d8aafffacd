// facegen: synthetic face-detection dataset generator.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "facegen/annotate.hpp"
#include "facegen/assets.hpp"
#include "facegen/config.hpp"
#include "facegen/errors.hpp"
#include "facegen/eval.hpp"
#include "facegen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace facegen;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfigError = 2, kAssetError = 3, kIoError = 4 };

struct AssetFailure : Error {
  using Error::Error;
};

struct ConfigOptions {
  std::string preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void add_config_options(CLI::App& cmd, ConfigOptions& opts) {
  cmd.add_option("--preset", opts.preset, "Named preset: s1, s2, s3, setA, setB, setC, mafa_occ");
  cmd.add_option("--config", opts.config_path, "JSON configuration applied on top of the preset");
  cmd.add_option("--seed", opts.seed, "Master seed");
}

PipelineConfig load_config(const ConfigOptions& opts) {
  PipelineConfig config = opts.preset.empty() ? PipelineConfig{} : preset(opts.preset);
  if (!opts.config_path.empty()) config = read_config(opts.config_path, config);
  if (opts.seed) config.generation.seed = *opts.seed;
  validate(config);
  return config;
}

std::shared_ptr<const AssetLibrary> load_library(const PipelineConfig& config) {
  try {
    return std::make_shared<const AssetLibrary>(load_assets(resolve_manifest(config.assets)));
  } catch (const Error& e) {
    throw AssetFailure(std::string("asset error: ") + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

int run_generate(const ConfigOptions& opts, const std::string& out, int jobs) {
  const PipelineConfig config = load_config(opts);
  const Pipeline pipeline(config, load_library(config));
  const GenerateResult result = generate_dataset(pipeline, {out, jobs, false});
  std::size_t faces = 0, ignored = 0, warnings = 0;
  for (const auto& img : result.images) {
    faces += img.faces.size();
    for (const auto& f : img.faces) ignored += f.ignored;
  }
  for (const auto& w : result.warnings) warnings += w.size();
  std::printf("generated %zu images, %zu faces (%zu ignored), %zu warnings in %.2f s -> %s\n", result.images.size(),
              faces, ignored, warnings, result.seconds, out.c_str());
  return kOk;
}

int run_preview(const ConfigOptions& opts, std::uint64_t index, const std::string& out, bool overlay) {
  const PipelineConfig config = load_config(opts);
  if (index >= static_cast<std::uint64_t>(config.generation.num_images))
    throw ConfigError("/num_images", "preview index " + std::to_string(index) + " is out of range (num_images " +
                                         std::to_string(config.generation.num_images) + ")");
  const Pipeline pipeline(config, load_library(config));
  const ProducedImage p = pipeline.produce(index);
  write_png(out, overlay ? draw_overlay(p.image, p.annotations, p.landmarks) : p.image);
  std::printf("image %llu: %zu faces, base %dx%d, environment %s -> %s\n", static_cast<unsigned long long>(index),
              p.annotations.faces.size(), p.base_width, p.base_height, p.scene.environment_id.c_str(), out.c_str());
  return kOk;
}

int run_validate(const std::string& manifest_path) {
  AssetManifest manifest;
  try {
    manifest = resolve_manifest(manifest_path);
  } catch (const Error& e) {
    throw AssetFailure(e.what());
  }
  std::size_t failed = 0;
  const std::vector<AssetCheck> checks = validate_assets(manifest);
  for (const AssetCheck& c : checks) {
    if (c.ok) {
      std::printf("PASS %s %s\n", c.category.c_str(), c.id.c_str());
    } else {
      ++failed;
      std::printf("FAIL %s %s: %s\n", c.category.c_str(), c.id.c_str(), c.reason.c_str());
    }
  }
  std::printf("%zu assets checked, %zu failed\n", checks.size(), failed);
  return kOk;
}

int run_evaluate(const std::string& pred, const std::string& gt, double iou_threshold, const std::string& out) {
  const std::vector<Detection> detections = read_detections(pred);
  const std::vector<AnnotatedImage> truth = read_annotations(gt);
  const EvalReport report = evaluate(detections, ground_truth_from(truth), iou_threshold);
  std::ostringstream report_csv, pr_csv;
  write_report_csv(report_csv, report);
  write_pr_csv(pr_csv, report);
  if (!out.empty()) {
    fs::create_directories(out);
    write_file(fs::path(out) / "report.csv", report_csv.str());
    write_file(fs::path(out) / "pr_curve.csv", pr_csv.str());
  }
  std::cout << report_csv.str();
  return kOk;
}

int run_stats(const std::string& annotations, const std::string& out) {
  std::ostringstream csv;
  write_stats_csv(csv, dataset_stats(read_annotations(annotations)));
  if (!out.empty()) write_file(out, csv.str());
  std::cout << csv.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic synthetic face-detection dataset generator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ConfigOptions gen_opts;
  std::string gen_out;
  int jobs = 1;
  auto* generate = app.add_subcommand("generate", "Render a dataset");
  add_config_options(*generate, gen_opts);
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  ConfigOptions preview_opts;
  std::uint64_t preview_index = 0;
  std::string preview_out;
  bool overlay = false;
  auto* preview = app.add_subcommand("preview", "Render one dataset image");
  preview->add_option("index", preview_index, "Image index")->required();
  add_config_options(*preview, preview_opts);
  preview->add_option("--out", preview_out, "Output PNG")->required();
  preview->add_flag("--overlay", overlay, "Draw boxes and landmarks");

  std::string manifest_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check every asset in a manifest");
  validate_cmd->add_option("manifest", manifest_path, "Asset manifest (default: $FACEGEN_ASSETS or built-ins)");

  std::string pred, gt, eval_out;
  double iou_threshold = 0.5;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate_cmd->add_option("predictions", pred, "Prediction file")->required();
  evaluate_cmd->add_option("ground_truth", gt, "Ground truth (wider.txt or coco.json)")->required();
  evaluate_cmd->add_option("--iou", iou_threshold, "IoU match threshold")->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--out", eval_out, "Directory for report.csv and pr_curve.csv");

  std::string stats_in, stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "Scale statistics of an annotation file");
  stats_cmd->add_option("annotations", stats_in, "wider.txt or coco.json")->required();
  stats_cmd->add_option("--out", stats_out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*generate) return run_generate(gen_opts, gen_out, jobs);
    if (*preview) return run_preview(preview_opts, preview_index, preview_out, overlay);
    if (*validate_cmd) return run_validate(manifest_path);
    if (*evaluate_cmd) return run_evaluate(pred, gt, iou_threshold, eval_out);
    if (*stats_cmd) return run_stats(stats_in, stats_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const UnknownPresetError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const EmptyPoolError& e) {
    std::fprintf(stderr, "asset error: %s\n", e.what());
    return kAssetError;
  } catch (const AssetFailure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kAssetError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
