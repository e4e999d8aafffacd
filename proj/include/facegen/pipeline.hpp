#pragma once

// End-to-end image production and dataset output.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "facegen/annotate.hpp"
#include "facegen/assets.hpp"
#include "facegen/config.hpp"
#include "facegen/render.hpp"
#include "facegen/scene.hpp"

namespace facegen {

inline constexpr const char* kToolVersion = "0.1.0";

// Manifest path, else $FACEGEN_ASSETS, else the built-in procedural set.
AssetManifest resolve_manifest(const std::string& path);

struct ProducedImage {
  SceneSpec scene;
  int base_width = 0;
  int base_height = 0;
  Rgb8Image image;
  AnnotatedImage annotations;
  std::vector<std::vector<Projection>> landmarks;  // per face, target resolution
  Framebuffer buffers;  // target-resolution depth and ids when requested
};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::shared_ptr<const AssetLibrary> assets);

  const PipelineConfig& config() const { return config_; }
  const AssetLibrary& assets() const { return *assets_; }
  const Renderer& renderer() const { return renderer_; }
  Camera target_camera() const;

  SceneSpec scene(std::uint64_t index) const;
  ProducedImage produce(std::uint64_t index, bool keep_buffers = false) const;
  // Annotations for a scene given the target-resolution ownership buffer.
  AnnotatedImage annotate(const SceneSpec& scene, const Image<std::uint16_t>& instance_ids,
                          std::vector<std::vector<Projection>>* landmarks = nullptr) const;

 private:
  PipelineConfig config_;
  std::shared_ptr<const AssetLibrary> assets_;
  Renderer renderer_;
};

std::string image_path(std::uint64_t index);

// Runs body(i) for i in [0, count) on `jobs` threads. The first exception is
// rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

struct GenerateOptions {
  std::filesystem::path out;
  int jobs = 1;
  bool debug_maps = false;  // depth and id PNGs under debug/
};

struct GenerateResult {
  std::vector<AnnotatedImage> images;
  std::vector<std::vector<std::string>> warnings;
  double seconds = 0.0;
};

// Writes images/, annotations/{wider.txt,coco.json}, stats.csv,
// manifest.json and timings.json. An INCOMPLETE marker stays behind when a
// fatal error interrupts the run.
GenerateResult generate_dataset(const Pipeline& pipeline, const GenerateOptions& options);

// Boxes in green (ignored in red) over landmark dots.
Rgb8Image draw_overlay(const Rgb8Image& image, const AnnotatedImage& annotations,
                       const std::vector<std::vector<Projection>>& landmarks);

}  // namespace facegen
