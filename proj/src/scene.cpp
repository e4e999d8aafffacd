#include "facegen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "facegen/annotate.hpp"
#include "facegen/errors.hpp"

namespace facegen {

namespace {

constexpr std::array<Region, 3> kAnchorRegions = {Region::head, Region::eye, Region::mouth};

Vec3 region_centroid(const FaceModel& model, Region region) {
  Vec3 sum = Vec3::Zero();
  int n = 0;
  for (const Landmark& l : model.landmarks) {
    if (l.region != region) continue;
    sum += l.position;
    ++n;
  }
  return n > 0 ? Vec3(sum / n) : model.landmark_centroid();
}

Pose sample_pose(Rng& rng, const PoseRanges& r) {
  Pose p;
  p.pitch = uniform(rng, r.pitch.min, r.pitch.max);
  p.yaw = uniform(rng, r.yaw.min, r.yaw.max);
  p.roll = uniform(rng, r.roll.min, r.roll.max);
  return p;
}

std::vector<std::size_t> resolve(const std::vector<std::string>& ids, std::size_t available, const char* key,
                                 const char* what, auto&& index_of) {
  if (available == 0) throw EmptyPoolError(std::string("no ") + what + " assets are loaded");
  std::vector<std::size_t> out;
  if (ids.empty()) {
    for (std::size_t i = 0; i < available; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    try {
      out.push_back(index_of(ids[i]));
    } catch (const Error&) {
      throw ConfigError(std::string(key) + "/" + std::to_string(i), std::string("unknown ") + what + " id '" + ids[i] + "'");
    }
  }
  return out;
}

OccluderPlacement sample_light_placement(Rng& rng, const OccluderMesh& occ) {
  OccluderPlacement p;
  p.occluder_id = occ.id;
  p.region = occ.anchor_region ? *occ.anchor_region : kAnchorRegions[uniform_int(rng, 0, 2)];
  for (int k = 0; k < 3; ++k) p.jitter[k] = uniform(rng, -kOccluderJitter, kOccluderJitter);
  p.scale = uniform(rng, 0.9, 1.1);
  return p;
}

bool overlap_ok(const FaceInstance& candidate, const std::vector<FaceInstance>& placed, double limit) {
  for (const FaceInstance& other : placed) {
    const double c = coverage_fraction(candidate.landmark_box, other.landmark_box, candidate.distance, other.distance);
    if (c > limit) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(CoverSide side) {
  switch (side) {
    case CoverSide::left: return "left";
    case CoverSide::right: return "right";
    case CoverSide::top: return "top";
    case CoverSide::bottom: return "bottom";
  }
  return "left";
}

RigidTransform face_transform(const FaceInstance& face, const FaceModel& model, const Camera& camera) {
  const Vec3 center = model.landmark_centroid();
  const Vec3 position_cam(face.lateral_offset.x(), face.lateral_offset.y(), -face.distance);
  RigidTransform t;
  t.rotation = camera.orientation * euler_rotation(face.pose);
  t.translation = camera.orientation * position_cam + camera.position - t.rotation * center;
  return t;
}

RigidTransform occluder_transform(const OccluderPlacement& placement, const FaceInstance& face,
                                  const FaceModel& model, const Camera& camera) {
  RigidTransform t;
  if (placement.heavy) {
    t.rotation = camera.orientation;
    t.scale = placement.plate_size;
    t.translation = camera.orientation * placement.plate_center + camera.position;
    return t;
  }
  t.scale = placement.scale;
  t.translation = region_centroid(model, placement.region) + placement.jitter;
  return t.then(face_transform(face, model, camera));
}

std::optional<Box> projected_landmark_box(const FaceModel& model, const RigidTransform& transform,
                                          const Camera& camera, double expand_top) {
  std::array<Projection, kLandmarkCount> points;
  for (int i = 0; i < kLandmarkCount; ++i) points[i] = project(camera, transform.apply(model.landmarks[i].position));
  return landmarks_to_box(points, camera.image_width, camera.image_height, expand_top);
}

double coverage_fraction(const Box& box_a, const Box& box_b, double depth_a, double depth_b) {
  const Box& farther = depth_a < depth_b ? box_b : box_a;
  const double area = farther.area();
  if (area <= 0.0) return 0.0;
  return std::clamp(intersection_area(box_a, box_b) / area, 0.0, 1.0);
}

OccluderPlacement make_heavy_placement(const FaceInstance& face, const FaceModel& model, const Camera& camera,
                                       CoverSide side, double overlap, std::string occluder_id) {
  const RigidTransform t = face_transform(face, model, camera);
  double x0 = std::numeric_limits<double>::max(), y0 = x0;
  double x1 = std::numeric_limits<double>::lowest(), y1 = x1;
  double nearest = std::numeric_limits<double>::max();
  for (const Vec3& v : model.mesh.vertices) {
    const Projection p = project(camera, t.apply(v));
    if (p.behind_camera) continue;
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
    nearest = std::min(nearest, p.depth);
  }
  OccluderPlacement out;
  out.occluder_id = std::move(occluder_id);
  out.heavy = true;
  out.side = side;
  out.overlap = overlap;
  if (nearest == std::numeric_limits<double>::max()) return out;

  const double bw = x1 - x0, bh = y1 - y0;
  const double cover = 0.5 + overlap;
  const bool horizontal = side == CoverSide::left || side == CoverSide::right;
  const double across = 1.2 * (horizontal ? bh : bw);
  const double along = cover * (horizontal ? bw : bh) + 0.1 * (horizontal ? bw : bh);
  const double size = std::max(across, along);

  double cx = (x0 + x1) / 2.0, cy = (y0 + y1) / 2.0;
  switch (side) {
    case CoverSide::left: cx = x0 + cover * bw - size / 2.0; break;
    case CoverSide::right: cx = x1 - cover * bw + size / 2.0; break;
    case CoverSide::top: cy = y0 + cover * bh - size / 2.0; break;
    case CoverSide::bottom: cy = y1 - cover * bh + size / 2.0; break;
  }

  const double depth = std::max(nearest - 0.25, (nearest + kNearPlane) / 2.0);
  const double f = camera.focal_px();
  out.plate_center = Vec3((cx - camera.image_width / 2.0) * depth / f, -(cy - camera.image_height / 2.0) * depth / f,
                          -depth);
  out.plate_size = size * depth / f;
  return out;
}

ScenePools resolve_pools(const GenerationConfig& config, const AssetLibrary& assets) {
  ScenePools pools;
  pools.models = resolve(config.model_pool, assets.models().size(), "/model_pool", "model",
                         [&](const std::string& id) { return assets.model_index(id); });
  pools.environments = resolve(config.background_pool, assets.environments().size(), "/background_pool",
                               "environment", [&](const std::string& id) { return assets.environment_index(id); });
  if (config.occlusion_mode != OcclusionMode::none)
    pools.occluders = resolve(config.occluder_pool, assets.occluders().size(), "/occluder_pool", "occluder",
                              [&](const std::string& id) { return assets.occluder_index(id); });
  return pools;
}

FaceInstance attach_occluders(FaceInstance face, OcclusionMode mode, Rng& rng, const std::vector<std::size_t>& pool,
                              const AssetLibrary& assets, const Camera& camera) {
  if (mode == OcclusionMode::none) return face;
  if (pool.empty()) throw EmptyPoolError("occluder pool is empty");
  auto pick = [&]() -> const OccluderMesh& {
    return assets.occluders()[pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)]];
  };

  if (mode == OcclusionMode::landmark) {
    face.occluders.push_back(sample_light_placement(rng, pick()));
    return face;
  }

  const int count = uniform_int(rng, 1, 2);
  const bool heavy = bernoulli(rng, 0.5);
  for (int k = 0; k < count; ++k) {
    const OccluderMesh& occ = pick();
    if (k == 0 && heavy) {
      const auto side = static_cast<CoverSide>(uniform_int(rng, 0, 3));
      face.occluders.push_back(make_heavy_placement(face, assets.model(face.model_id), camera, side, 0.2, occ.id));
    } else {
      face.occluders.push_back(sample_light_placement(rng, occ));
    }
  }
  return face;
}

std::size_t occluder_combination_count(const AssetLibrary& assets, const std::vector<std::size_t>& pool) {
  std::set<std::pair<std::string, Region>> pairs;
  for (std::size_t i : pool) {
    const OccluderMesh& occ = assets.occluders()[i];
    if (occ.anchor_region) {
      pairs.emplace(occ.id, *occ.anchor_region);
    } else {
      for (Region r : kAnchorRegions) pairs.emplace(occ.id, r);
    }
  }
  const auto cells = static_cast<std::size_t>(std::lround(2.0 * kOccluderJitter / kJitterCell));
  return pairs.size() * cells * cells * cells;
}

SceneSpec sample_scene(const GenerationConfig& config, std::uint64_t image_index, const AssetLibrary& assets,
                       const Camera& camera, double expand_top) {
  const ScenePools pools = resolve_pools(config, assets);
  SceneSpec scene;
  scene.image_id = image_index;
  scene.rng_trace = mix_seed(config.seed, image_index);
  scene.camera = camera;
  Rng rng(scene.rng_trace);

  scene.environment_id =
      assets.environments()[pools.environments[uniform_int(rng, 0, static_cast<int>(pools.environments.size()) - 1)]].id;
  scene.requested_faces = uniform_int(rng, config.face_count_range.min, config.face_count_range.max);

  const double tan_h = camera.tan_half_horizontal();
  const double tan_v = camera.tan_half_vertical();
  auto try_place = [&]() -> std::optional<FaceInstance> {
    FaceInstance face;
    const FaceModel& model =
        assets.models()[pools.models[uniform_int(rng, 0, static_cast<int>(pools.models.size()) - 1)]];
    face.model_id = model.id;
    face.extreme_pose = bernoulli(rng, config.extreme_pose_fraction);
    face.pose = sample_pose(rng, face.extreme_pose ? config.extreme_pose_ranges : config.pose_ranges);
    const Range& d = config.distance_range;
    face.distance = d.max - (d.max - d.min) * uniform01(rng);
    face.lateral_offset = Vec2(uniform(rng, -1.0, 1.0) * face.distance * tan_h,
                               uniform(rng, -1.0, 1.0) * face.distance * tan_v);
    const std::optional<Box> box = projected_landmark_box(model, face_transform(face, model, camera), camera, expand_top);
    if (!box || !(box->w > config.min_face_px.width && box->h > config.min_face_px.height)) return std::nullopt;
    face.landmark_box = *box;
    if (!overlap_ok(face, scene.faces, config.face_overlap_coverage_max)) return std::nullopt;
    return attach_occluders(std::move(face), config.occlusion_mode, rng, pools.occluders, assets, camera);
  };

  for (int slot = 0; slot < scene.requested_faces; ++slot) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      if (auto face = try_place()) {
        scene.faces.push_back(std::move(*face));
        placed = true;
      }
    }
    if (!placed)
      scene.warnings.push_back("face slot " + std::to_string(slot) + " dropped after " +
                               std::to_string(kMaxPlacementAttempts) + " placement attempts");
  }
  // A scene always carries at least one face when one can be placed at all.
  for (int attempt = 0; scene.faces.empty() && attempt < 10 * kMaxPlacementAttempts; ++attempt)
    if (auto face = try_place()) scene.faces.push_back(std::move(*face));
  if (scene.faces.empty()) scene.warnings.push_back("no face could be placed");
  return scene;
}

}  // namespace facegen
