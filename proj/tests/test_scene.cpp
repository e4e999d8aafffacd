#include <doctest.h>

#include <cmath>
#include <set>

#include "facegen/errors.hpp"
#include "facegen/scene.hpp"
#include "test_util.hpp"

using namespace facegen;

namespace {

Camera camera_640() {
  Camera cam;
  cam.image_width = 640;
  cam.image_height = 480;
  return cam;
}

bool same_scene(const SceneSpec& a, const SceneSpec& b) {
  if (a.environment_id != b.environment_id || a.requested_faces != b.requested_faces ||
      a.faces.size() != b.faces.size() || a.warnings != b.warnings)
    return false;
  for (std::size_t i = 0; i < a.faces.size(); ++i) {
    const FaceInstance &f = a.faces[i], &g = b.faces[i];
    if (f.model_id != g.model_id || !(f.pose == g.pose) || f.distance != g.distance ||
        f.lateral_offset != g.lateral_offset || !(f.landmark_box == g.landmark_box) ||
        f.occluders.size() != g.occluders.size())
      return false;
    for (std::size_t k = 0; k < f.occluders.size(); ++k)
      if (f.occluders[k].occluder_id != g.occluders[k].occluder_id || f.occluders[k].jitter != g.occluders[k].jitter ||
          f.occluders[k].scale != g.occluders[k].scale)
        return false;
  }
  return true;
}

}  // namespace

TEST_CASE("degenerate ranges pin the scene") {
  const auto lib = test_util::builtin_library();
  GenerationConfig c;
  c.face_count_range = {1, 1};
  c.distance_range = {2, 2};
  c.pose_ranges = {{0, 0}, {0, 0}, {0, 0}};
  const SceneSpec s = sample_scene(c, 0, *lib, camera_640());
  REQUIRE(s.faces.size() == 1);
  CHECK(s.faces[0].pose == Pose{});
  CHECK(s.faces[0].distance == 2.0);
  CHECK(s.warnings.empty());
}

TEST_CASE("scenes are deterministic in (config, index)") {
  const auto lib = test_util::builtin_library();
  GenerationConfig c;
  c.seed = 42;
  c.occlusion_mode = OcclusionMode::mixed;
  for (std::uint64_t i : {0u, 1u, 17u}) CHECK(same_scene(sample_scene(c, i, *lib, camera_640()), sample_scene(c, i, *lib, camera_640())));
  CHECK_FALSE(same_scene(sample_scene(c, 0, *lib, camera_640()), sample_scene(c, 1, *lib, camera_640())));
}

TEST_CASE("default pose distribution") {
  const auto lib = test_util::builtin_library();
  GenerationConfig c;
  c.seed = 3;
  c.face_count_range = {40, 48};
  double sum[3] = {0, 0, 0};
  std::size_t n = 0;
  for (std::uint64_t i = 0; n < 10000; ++i) {
    for (const FaceInstance& f : sample_scene(c, i, *lib, camera_640()).faces) {
      REQUIRE(std::abs(f.pose.pitch) <= 15.0);
      REQUIRE(std::abs(f.pose.yaw) <= 60.0);
      REQUIRE(std::abs(f.pose.roll) <= 15.0);
      REQUIRE(f.distance > 0.0);
      REQUIRE(f.distance <= 20.0);
      sum[0] += f.pose.pitch;
      sum[1] += f.pose.yaw;
      sum[2] += f.pose.roll;
      ++n;
    }
  }
  for (double s : sum) CHECK(std::abs(s / n) < 1.0);
}

TEST_CASE("placed faces respect the size and overlap limits") {
  const auto lib = test_util::builtin_library();
  GenerationConfig c;
  c.seed = 8;
  for (std::uint64_t i = 0; i < 30; ++i) {
    const SceneSpec s = sample_scene(c, i, *lib, camera_640());
    CHECK(s.requested_faces >= 1);
    CHECK(s.requested_faces <= 48);
    CHECK(!s.faces.empty());
    for (std::size_t a = 0; a < s.faces.size(); ++a) {
      CHECK(s.faces[a].landmark_box.w > 8);
      CHECK(s.faces[a].landmark_box.h > 10);
      for (std::size_t b = 0; b < a; ++b)
        CHECK(coverage_fraction(s.faces[a].landmark_box, s.faces[b].landmark_box, s.faces[a].distance,
                                s.faces[b].distance) <= 0.5);
    }
  }
}

TEST_CASE("coverage fraction") {
  const Box b{0, 0, 10, 10};
  CHECK(coverage_fraction(b, b, 1.0, 2.0) == 1.0);
  CHECK(coverage_fraction(b, Box{20, 20, 5, 5}, 1.0, 2.0) == 0.0);
  CHECK(coverage_fraction(Box{0, 0, 5, 10}, b, 1.0, 2.0) == 0.5);
  CHECK(coverage_fraction(b, Box{0, 0, 5, 10}, 2.0, 1.0) == 0.5);
}

TEST_CASE("occluder attachment") {
  const auto lib = test_util::builtin_library();
  GenerationConfig occluded;
  occluded.occlusion_mode = OcclusionMode::landmark;
  const ScenePools pools = resolve_pools(occluded, *lib);
  const Camera cam = camera_640();
  FaceInstance face;
  face.model_id = lib->models().front().id;
  face.distance = 1.5;

  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const FaceInstance f = attach_occluders(face, OcclusionMode::landmark, rng, pools.occluders, *lib, cam);
    REQUIRE(f.occluders.size() == 1);
    const OccluderPlacement& p = f.occluders[0];
    CHECK((p.region == Region::head || p.region == Region::eye || p.region == Region::mouth));
    if (lib->occluder(p.occluder_id).kind == OccluderKind::sunglasses) CHECK(p.region == Region::eye);
    CHECK(p.jitter.cwiseAbs().maxCoeff() <= kOccluderJitter);
    CHECK(p.scale >= 0.9);
    CHECK(p.scale <= 1.1);
    CHECK_FALSE(p.heavy);
  }

  int heavy = 0;
  for (int i = 0; i < 400; ++i) {
    const FaceInstance f = attach_occluders(face, OcclusionMode::mixed, rng, pools.occluders, *lib, cam);
    CHECK(f.occluders.size() >= 1);
    CHECK(f.occluders.size() <= 2);
    heavy += f.occluders[0].heavy;
  }
  CHECK(heavy > 150);
  CHECK(heavy < 250);

  CHECK(attach_occluders(face, OcclusionMode::none, rng, pools.occluders, *lib, cam).occluders.empty());
  CHECK(occluder_combination_count(*lib, pools.occluders) > 1000);
}

TEST_CASE("pool resolution") {
  const auto lib = test_util::builtin_library();
  GenerationConfig c;
  c.model_pool = {lib->models()[2].id};
  const SceneSpec s = sample_scene(c, 5, *lib, camera_640());
  for (const FaceInstance& f : s.faces) CHECK(f.model_id == lib->models()[2].id);

  c.model_pool = {"nobody"};
  try {
    resolve_pools(c, *lib);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "/model_pool/0");
  }

  FaceModel head = make_test_head(1, 2);
  head.id = "head";
  const AssetLibrary bare({head}, "head", {make_procedural_environment(1, 64)}, {});
  GenerationConfig occluded;
  CHECK_NOTHROW(resolve_pools(occluded, bare));
  occluded.occlusion_mode = OcclusionMode::landmark;
  CHECK_THROWS_AS(resolve_pools(occluded, bare), EmptyPoolError);
}
