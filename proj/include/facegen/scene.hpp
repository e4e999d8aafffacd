#pragma once

// Randomized scene composition: face count, per-face pose, distance and
// placement, occluder attachment, and the face-over-face overlap limit.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "facegen/assets.hpp"
#include "facegen/box.hpp"
#include "facegen/config.hpp"
#include "facegen/geometry.hpp"
#include "facegen/rng.hpp"

namespace facegen {

inline constexpr int kMaxPlacementAttempts = 100;
// Occluder jitter is uniform in +-kOccluderJitter meters per axis; the
// combination count is taken over cells of kJitterCell meters.
inline constexpr double kOccluderJitter = 0.01;
inline constexpr double kJitterCell = 0.0025;

enum class CoverSide { left, right, top, bottom };

std::string_view to_string(CoverSide side);

struct OccluderPlacement {
  std::string occluder_id;
  Region region = Region::eye;
  Vec3 jitter = Vec3::Zero();  // meters, model frame
  double scale = 1.0;
  // Heavy occluders are billboards between the camera and the face, given in
  // camera coordinates; they cover `side` plus `overlap` of the face extent.
  bool heavy = false;
  CoverSide side = CoverSide::left;
  double overlap = 0.0;
  Vec3 plate_center = Vec3::Zero();
  double plate_size = 0.0;
};

struct FaceInstance {
  std::string model_id;
  Pose pose;
  bool extreme_pose = false;
  double distance = 0.0;             // depth of the landmark centroid, meters
  Vec2 lateral_offset = Vec2::Zero();  // camera frame, meters
  std::vector<OccluderPlacement> occluders;
  Box landmark_box;  // projected at the target resolution
};

struct SceneSpec {
  std::uint64_t image_id = 0;
  std::uint64_t rng_trace = 0;  // per-image seed
  std::string environment_id;
  Camera camera;
  int requested_faces = 0;
  std::vector<FaceInstance> faces;
  std::vector<std::string> warnings;
};

// Model space -> world space for a placed face.
RigidTransform face_transform(const FaceInstance& face, const FaceModel& model, const Camera& camera);
// Occluder mesh space -> world space.
RigidTransform occluder_transform(const OccluderPlacement& placement, const FaceInstance& face,
                                  const FaceModel& model, const Camera& camera);

// Projected landmark box of a placed face (clipped, rounded outward), or
// nullopt when fewer than three landmarks lie in front of the camera.
std::optional<Box> projected_landmark_box(const FaceModel& model, const RigidTransform& transform,
                                          const Camera& camera, double expand_top);

// Fraction of the farther face's box covered by the nearer face's box.
double coverage_fraction(const Box& box_a, const Box& box_b, double depth_a, double depth_b);

// Billboard that hides `side` plus `overlap` of the face's projected extent.
OccluderPlacement make_heavy_placement(const FaceInstance& face, const FaceModel& model, const Camera& camera,
                                       CoverSide side, double overlap, std::string occluder_id);

struct ScenePools {
  std::vector<std::size_t> models;
  std::vector<std::size_t> environments;
  std::vector<std::size_t> occluders;
};

// Resolves configured pool ids; throws EmptyPoolError or ConfigError.
ScenePools resolve_pools(const GenerationConfig& config, const AssetLibrary& assets);

FaceInstance attach_occluders(FaceInstance face, OcclusionMode mode, Rng& rng, const std::vector<std::size_t>& pool,
                              const AssetLibrary& assets, const Camera& camera);

// Number of distinct (kind, region, jitter cell) combinations available.
std::size_t occluder_combination_count(const AssetLibrary& assets, const std::vector<std::size_t>& pool);

// Deterministic in (config, image_index, assets, camera).
SceneSpec sample_scene(const GenerationConfig& config, std::uint64_t image_index, const AssetLibrary& assets,
                       const Camera& camera, double expand_top = 0.1);

}  // namespace facegen
