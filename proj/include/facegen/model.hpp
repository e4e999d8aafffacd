#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facegen/image.hpp"

namespace facegen {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Triangle = std::array<std::uint32_t, 3>;

inline constexpr int kLandmarkCount = 50;

enum class Region { head, eye, mouth, outline };

std::string_view to_string(Region region);
std::optional<Region> parse_region(std::string_view text);

struct Landmark {
  int index = 0;
  Vec3 position = Vec3::Zero();
  Region region = Region::outline;
};

using LandmarkSet = std::array<Landmark, kLandmarkCount>;

// Triangle mesh with per-vertex texture coordinates and a single linear-albedo
// texture. Counter-clockwise winding seen from outside is front-facing.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec2> uv;
  RgbImage texture;
  // Area-weighted vertex normals, filled by compute_normals().
  std::vector<Vec3> normals;

  void compute_normals();
  Vec3 centroid() const;
  double bounding_radius(const Vec3& center) const;
};

struct FaceModel {
  std::string id;
  TriangleMesh mesh;
  LandmarkSet landmarks;

  Vec3 landmark_centroid() const;
  std::vector<Vec3> landmark_positions() const;
};

struct Environment {
  std::string id;
  // Equirectangular, width == 2 * height, linear radiance.
  RgbImage radiance;
  bool is_indoor = false;
};

enum class OccluderKind { sunglasses, hat, helmet, generic };

std::string_view to_string(OccluderKind kind);
std::optional<OccluderKind> parse_occluder_kind(std::string_view text);
// nullopt for generic: it may anchor at any region.
std::optional<Region> anchor_region_for(OccluderKind kind);

// Occluder geometry is expressed in meters relative to its anchor point, in a
// frame where the face looks along +Z and +Y is up.
struct OccluderMesh {
  std::string id;
  OccluderKind kind = OccluderKind::generic;
  TriangleMesh mesh;
  std::optional<Region> anchor_region;
};

}  // namespace facegen
