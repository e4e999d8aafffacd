#include <doctest.h>

#include "facegen/config.hpp"
#include "facegen/errors.hpp"

using namespace facegen;

TEST_CASE("defaults follow the rendering settings") {
  const PipelineConfig c;
  CHECK(c.generation.face_count_range == IntRange{1, 48});
  CHECK(c.generation.distance_range == Range{0.0, 20.0});
  CHECK(c.generation.pose_ranges.pitch == Range{-15, 15});
  CHECK(c.generation.pose_ranges.yaw == Range{-60, 60});
  CHECK(c.generation.pose_ranges.roll == Range{-15, 15});
  CHECK(c.generation.min_face_px == MinFacePx{8, 10});
  CHECK(c.render.cull_backfaces);
  CHECK(c.render.target_width == 1024);
  CHECK(c.render.target_height == 768);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("presets") {
  CHECK(preset("s1").generation.occlusion_mode == OcclusionMode::landmark);
  CHECK(preset("s2").generation.face_overlap_coverage_max == 0.5);
  CHECK(preset("s3").render.base_resolutions == std::vector<int>{4096, 3072, 2048});
  CHECK(preset("setA").render.base_resolutions == std::vector<int>{4096, 3072, 2048});
  CHECK(preset("setB").render.base_resolutions == std::vector<int>{4096, 3072, 2048, 512, 256, 128});
  CHECK(preset("setC").render.base_resolutions == std::vector<int>{512, 256, 128});
  CHECK(preset("mafa_occ").generation.occlusion_mode == OcclusionMode::mixed);
  CHECK_THROWS_AS(preset("s4"), UnknownPresetError);
  for (const std::string& name : preset_names()) CHECK_NOTHROW(validate(preset(name)));
}

TEST_CASE("JSON round trip") {
  PipelineConfig c = preset("setB");
  c.generation.seed = 1234567890123ULL;
  c.generation.model_pool = {"head_000", "head_001"};
  c.annotation.mafa_ignore = true;
  const PipelineConfig back = config_from_json(to_json(c));
  CHECK(back == c);
}

TEST_CASE("config parsing errors name the key") {
  try {
    parse_config(R"({"seed": 3, "bogus": 1})");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "/bogus");
  }
  try {
    parse_config(R"({"render": {"exposure": -1}})");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "/render/exposure");
  }
  CHECK_THROWS_AS(parse_config(R"({"face_count_range": [5, 2]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"extreme_pose_fraction": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"occlusion_mode": "partial"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"preset": "s9"})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);

  const PipelineConfig c = parse_config(R"({"preset": "s2", "seed": 9, "num_images": 3})");
  CHECK(c.generation.seed == 9);
  CHECK(c.generation.face_overlap_coverage_max == 0.5);
}
