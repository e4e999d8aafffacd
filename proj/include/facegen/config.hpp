#pragma once

// Generation, render and annotation settings, their JSON form, and the named
// experiment presets.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace facegen {

struct Range {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct IntRange {
  int min = 0;
  int max = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct PoseRanges {
  Range pitch{-15.0, 15.0};
  Range yaw{-60.0, 60.0};
  Range roll{-15.0, 15.0};
  friend bool operator==(const PoseRanges&, const PoseRanges&) = default;
};

enum class OcclusionMode { none, landmark, mixed };

struct MinFacePx {
  int width = 8;
  int height = 10;
  friend bool operator==(const MinFacePx&, const MinFacePx&) = default;
};

struct GenerationConfig {
  std::uint64_t seed = 0;
  int num_images = 20;
  IntRange face_count_range{1, 48};
  Range distance_range{0.0, 20.0};  // sampled in (min, max]
  PoseRanges pose_ranges;
  double extreme_pose_fraction = 0.0;
  PoseRanges extreme_pose_ranges{{-45.0, 45.0}, {-90.0, 90.0}, {-45.0, 45.0}};
  OcclusionMode occlusion_mode = OcclusionMode::none;
  double face_overlap_coverage_max = 0.5;
  MinFacePx min_face_px;  // boxes must be strictly larger
  std::vector<std::string> background_pool;  // empty: every environment
  std::vector<std::string> model_pool;       // empty: every model
  std::vector<std::string> occluder_pool;    // empty: every occluder
  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

enum class Lighting { ambient_only, sh_irradiance };

struct RenderConfig {
  std::vector<int> base_resolutions;  // widths, height = width * 3 / 4; empty: target width
  int target_width = 1024;
  int target_height = 768;
  Lighting lighting = Lighting::sh_irradiance;
  int sh_bands = 3;
  bool cull_backfaces = true;
  double exposure = 1.0;
  double vertical_fov = 45.0;
  friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

struct AnnotationOptions {
  double expand_top = 0.1;
  bool mafa_ignore = false;  // ignore faces with a side shorter than 32 px
  friend bool operator==(const AnnotationOptions&, const AnnotationOptions&) = default;
};

struct PipelineConfig {
  GenerationConfig generation;
  RenderConfig render;
  AnnotationOptions annotation;
  std::string assets;  // asset manifest path; empty: FACEGEN_ASSETS or built-ins
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Throws ConfigError naming the offending key.
void validate(const PipelineConfig& config);

nlohmann::json to_json(const PipelineConfig& config);
// Keys are applied on top of `base`; unknown keys throw ConfigError.
PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base = {});
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig read_config(const std::string& path, PipelineConfig base = {});

// s1, s2, s3, setA, setB, setC, mafa_occ. Throws UnknownPresetError.
PipelineConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();

std::string_view to_string(OcclusionMode mode);
std::string_view to_string(Lighting lighting);

}  // namespace facegen
