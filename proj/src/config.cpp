#include "facegen/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "facegen/errors.hpp"

namespace facegen {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& message) { throw ConfigError(key, message); }

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(key, "expected a finite number");
  return d;
}

int get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

Range get_range(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2) bad(key, "expected [min, max]");
  return {get_number(v[0], key + "/0"), get_number(v[1], key + "/1")};
}

IntRange get_int_range(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2) bad(key, "expected [min, max]");
  return {get_int(v[0], key + "/0"), get_int(v[1], key + "/1")};
}

std::vector<std::string> get_strings(const json& v, const std::string& key) {
  if (!v.is_array()) bad(key, "expected a list of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_string(v[i], key + "/" + std::to_string(i)));
  return out;
}

PoseRanges get_pose_ranges(const json& v, const std::string& key, PoseRanges base) {
  if (!v.is_object()) bad(key, "expected an object with pitch, yaw, roll");
  for (const auto& [k, item] : v.items()) {
    const std::string path = key + "/" + k;
    if (k == "pitch") base.pitch = get_range(item, path);
    else if (k == "yaw") base.yaw = get_range(item, path);
    else if (k == "roll") base.roll = get_range(item, path);
    else bad(path, "unknown key");
  }
  return base;
}

json range_json(const Range& r) { return json::array({r.min, r.max}); }

json pose_json(const PoseRanges& p) {
  return {{"pitch", range_json(p.pitch)}, {"yaw", range_json(p.yaw)}, {"roll", range_json(p.roll)}};
}

void check_range(const Range& r, const std::string& key) {
  if (!(r.min <= r.max)) bad(key, "range must satisfy min <= max");
}

void check_fraction(double v, const std::string& key) {
  if (!(v >= 0.0 && v <= 1.0)) bad(key, "must lie in [0, 1]");
}

void apply_render(const json& v, RenderConfig& r) {
  if (!v.is_object()) bad("/render", "expected an object");
  for (const auto& [k, item] : v.items()) {
    const std::string key = "/render/" + k;
    if (k == "base_resolutions") {
      if (!item.is_array()) bad(key, "expected a list of widths");
      r.base_resolutions.clear();
      for (std::size_t i = 0; i < item.size(); ++i) r.base_resolutions.push_back(get_int(item[i], key + "/" + std::to_string(i)));
    } else if (k == "target_resolution") {
      const IntRange wh = get_int_range(item, key);
      r.target_width = wh.min;
      r.target_height = wh.max;
    } else if (k == "lighting") {
      const std::string s = get_string(item, key);
      if (s == "sh_irradiance") r.lighting = Lighting::sh_irradiance;
      else if (s == "ambient_only") r.lighting = Lighting::ambient_only;
      else bad(key, "expected ambient_only or sh_irradiance");
    } else if (k == "sh_bands") {
      r.sh_bands = get_int(item, key);
    } else if (k == "cull_backfaces") {
      r.cull_backfaces = get_bool(item, key);
    } else if (k == "exposure") {
      r.exposure = get_number(item, key);
    } else if (k == "vertical_fov") {
      r.vertical_fov = get_number(item, key);
    } else {
      bad(key, "unknown key");
    }
  }
}

void apply_annotation(const json& v, AnnotationOptions& a) {
  if (!v.is_object()) bad("/annotation", "expected an object");
  for (const auto& [k, item] : v.items()) {
    const std::string key = "/annotation/" + k;
    if (k == "expand_top") a.expand_top = get_number(item, key);
    else if (k == "mafa_ignore") a.mafa_ignore = get_bool(item, key);
    else bad(key, "unknown key");
  }
}

}  // namespace

std::string_view to_string(OcclusionMode mode) {
  switch (mode) {
    case OcclusionMode::none: return "none";
    case OcclusionMode::landmark: return "landmark";
    case OcclusionMode::mixed: return "mixed";
  }
  return "none";
}

std::string_view to_string(Lighting lighting) {
  return lighting == Lighting::ambient_only ? "ambient_only" : "sh_irradiance";
}

void validate(const PipelineConfig& config) {
  const GenerationConfig& g = config.generation;
  if (g.num_images < 0) bad("/num_images", "must be non-negative");
  if (g.face_count_range.min < 1 || g.face_count_range.min > g.face_count_range.max)
    bad("/face_count_range", "must satisfy 1 <= min <= max");
  check_range(g.distance_range, "/distance_range");
  if (g.distance_range.min < 0.0 || !(g.distance_range.max > 0.0))
    bad("/distance_range", "distances must satisfy 0 <= min <= max with max > 0");
  for (const auto& [ranges, key] : {std::pair{&g.pose_ranges, "/pose_ranges"}, {&g.extreme_pose_ranges, "/extreme_pose_ranges"}}) {
    check_range(ranges->pitch, std::string(key) + "/pitch");
    check_range(ranges->yaw, std::string(key) + "/yaw");
    check_range(ranges->roll, std::string(key) + "/roll");
  }
  check_fraction(g.extreme_pose_fraction, "/extreme_pose_fraction");
  check_fraction(g.face_overlap_coverage_max, "/face_overlap_coverage_max");
  if (g.min_face_px.width < 0 || g.min_face_px.height < 0) bad("/min_face_px", "must be non-negative");

  const RenderConfig& r = config.render;
  for (std::size_t i = 0; i < r.base_resolutions.size(); ++i)
    if (r.base_resolutions[i] < 8 || r.base_resolutions[i] % 4 != 0)
      bad("/render/base_resolutions/" + std::to_string(i), "widths must be multiples of 4 and at least 8");
  if (r.target_width < 8 || r.target_width * 3 != r.target_height * 4)
    bad("/render/target_resolution", "target must be 4:3 and at least 8 wide");
  if (r.sh_bands != 3) bad("/render/sh_bands", "only 3 bands (9 coefficients) are supported");
  if (!(r.exposure > 0.0)) bad("/render/exposure", "must be positive");
  if (!(r.vertical_fov > 0.0 && r.vertical_fov < 180.0)) bad("/render/vertical_fov", "must lie in (0, 180)");
  if (!(config.annotation.expand_top >= 0.0)) bad("/annotation/expand_top", "must be non-negative");
}

json to_json(const PipelineConfig& config) {
  const GenerationConfig& g = config.generation;
  const RenderConfig& r = config.render;
  json doc;
  doc["seed"] = g.seed;
  doc["num_images"] = g.num_images;
  doc["face_count_range"] = json::array({g.face_count_range.min, g.face_count_range.max});
  doc["distance_range"] = range_json(g.distance_range);
  doc["pose_ranges"] = pose_json(g.pose_ranges);
  doc["extreme_pose_fraction"] = g.extreme_pose_fraction;
  doc["extreme_pose_ranges"] = pose_json(g.extreme_pose_ranges);
  doc["occlusion_mode"] = std::string(to_string(g.occlusion_mode));
  doc["face_overlap_coverage_max"] = g.face_overlap_coverage_max;
  doc["min_face_px"] = json::array({g.min_face_px.width, g.min_face_px.height});
  doc["background_pool"] = g.background_pool;
  doc["model_pool"] = g.model_pool;
  doc["occluder_pool"] = g.occluder_pool;
  doc["render"] = {{"base_resolutions", r.base_resolutions},
                   {"target_resolution", json::array({r.target_width, r.target_height})},
                   {"lighting", std::string(to_string(r.lighting))},
                   {"sh_bands", r.sh_bands},
                   {"cull_backfaces", r.cull_backfaces},
                   {"exposure", r.exposure},
                   {"vertical_fov", r.vertical_fov}};
  doc["annotation"] = {{"expand_top", config.annotation.expand_top}, {"mafa_ignore", config.annotation.mafa_ignore}};
  doc["assets"] = config.assets;
  return doc;
}

PipelineConfig config_from_json(const json& doc, PipelineConfig base) {
  if (!doc.is_object()) bad("", "configuration must be a JSON object");
  if (doc.contains("preset")) {
    const std::string name = get_string(doc["preset"], "/preset");
    try {
      base = preset(name);
    } catch (const UnknownPresetError& e) {
      bad("/preset", e.what());
    }
  }
  PipelineConfig c = std::move(base);
  GenerationConfig& g = c.generation;
  for (const auto& [k, v] : doc.items()) {
    const std::string key = "/" + k;
    if (k == "preset") continue;
    if (k == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        bad(key, "expected a non-negative integer");
      g.seed = v.get<std::uint64_t>();
    } else if (k == "num_images") {
      g.num_images = get_int(v, key);
    } else if (k == "face_count_range") {
      g.face_count_range = get_int_range(v, key);
    } else if (k == "distance_range") {
      g.distance_range = get_range(v, key);
    } else if (k == "pose_ranges") {
      g.pose_ranges = get_pose_ranges(v, key, g.pose_ranges);
    } else if (k == "extreme_pose_fraction") {
      g.extreme_pose_fraction = get_number(v, key);
    } else if (k == "extreme_pose_ranges") {
      g.extreme_pose_ranges = get_pose_ranges(v, key, g.extreme_pose_ranges);
    } else if (k == "occlusion_mode") {
      const std::string s = get_string(v, key);
      if (s == "none") g.occlusion_mode = OcclusionMode::none;
      else if (s == "landmark") g.occlusion_mode = OcclusionMode::landmark;
      else if (s == "mixed") g.occlusion_mode = OcclusionMode::mixed;
      else bad(key, "expected none, landmark or mixed");
    } else if (k == "face_overlap_coverage_max") {
      g.face_overlap_coverage_max = get_number(v, key);
    } else if (k == "min_face_px") {
      const IntRange wh = get_int_range(v, key);
      g.min_face_px = {wh.min, wh.max};
    } else if (k == "background_pool") {
      g.background_pool = get_strings(v, key);
    } else if (k == "model_pool") {
      g.model_pool = get_strings(v, key);
    } else if (k == "occluder_pool") {
      g.occluder_pool = get_strings(v, key);
    } else if (k == "render") {
      apply_render(v, c.render);
    } else if (k == "annotation") {
      apply_annotation(v, c.annotation);
    } else if (k == "assets") {
      c.assets = get_string(v, key);
    } else {
      bad(key, "unknown key");
    }
  }
  validate(c);
  return c;
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(doc, std::move(base));
}

PipelineConfig read_config(const std::string& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base));
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"s1", "s2", "s3", "setA", "setB", "setC", "mafa_occ"};
  return names;
}

PipelineConfig preset(std::string_view name) {
  PipelineConfig c;
  if (name == "s1" || name == "s2" || name == "s3") {
    c.generation.occlusion_mode = OcclusionMode::landmark;
    c.generation.face_overlap_coverage_max = name == "s1" ? 0.0 : 0.5;
    if (name == "s3") c.render.base_resolutions = {4096, 3072, 2048};
  } else if (name == "setA") {
    c.render.base_resolutions = {4096, 3072, 2048};
  } else if (name == "setB") {
    c.render.base_resolutions = {4096, 3072, 2048, 512, 256, 128};
  } else if (name == "setC") {
    c.render.base_resolutions = {512, 256, 128};
  } else if (name == "mafa_occ") {
    c.generation.occlusion_mode = OcclusionMode::mixed;
    c.generation.face_overlap_coverage_max = 0.0;
  } else {
    throw UnknownPresetError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

}  // namespace facegen
