#pragma once

// Deterministic z-buffer rasterizer with environment backgrounds, spherical
// harmonic irradiance lighting, and the render-then-resize pipeline.

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "facegen/assets.hpp"
#include "facegen/config.hpp"
#include "facegen/geometry.hpp"
#include "facegen/image.hpp"
#include "facegen/scene.hpp"

namespace facegen {

inline constexpr std::uint16_t kNoInstance = 0;
inline constexpr std::uint16_t kOccluderInstanceBit = 0x8000;

// Face k owns instance id k + 1; its occluders carry the high bit.
inline std::uint16_t face_instance_id(std::size_t face) { return static_cast<std::uint16_t>(face + 1); }
inline std::uint16_t occluder_instance_id(std::size_t face, std::size_t occluder) {
  return static_cast<std::uint16_t>(kOccluderInstanceBit | (face * 4 + occluder));
}

struct DrawItem {
  const TriangleMesh* mesh = nullptr;
  RigidTransform transform;  // mesh space -> world space
  std::uint16_t instance = kNoInstance;
  const RgbImage* texture = nullptr;  // replaces the mesh texture when set
};

struct Framebuffer {
  RgbImage color;                    // linear
  Image<float> depth;                // meters; +inf where no triangle
  Image<std::uint16_t> instance_id;  // kNoInstance where no triangle
};

inline constexpr float kInfiniteDepth = std::numeric_limits<float>::infinity();

// Nine SH coefficients per channel, basis oriented with +Y as the pole.
using ShCoefficients = std::array<Vec3, 9>;

// Integrates each basis function exactly over every equirectangular cell.
ShCoefficients project_sh(const RgbImage& radiance);
// Cosine-convolved irradiance divided by pi: a constant environment of
// radiance c yields c for every normal.
Vec3 sh_irradiance(const ShCoefficients& sh, const Vec3& normal);
// Solid-angle weighted mean radiance.
Vec3 mean_radiance(const RgbImage& radiance);

// Bilinear equirectangular lookup at u = 0.5 + atan2(dx, -dz) / 2pi,
// v = acos(dy) / pi; wraps horizontally, clamps vertically.
Rgb env_lookup(const RgbImage& radiance, const Vec3& direction);
inline Rgb env_lookup(const Environment& env, const Vec3& direction) { return env_lookup(env.radiance, direction); }

struct EnvironmentLight {
  Lighting mode = Lighting::sh_irradiance;
  ShCoefficients sh{};
  Vec3 mean = Vec3::Zero();

  Vec3 irradiance(const Vec3& normal) const { return mode == Lighting::sh_irradiance ? sh_irradiance(sh, normal) : mean; }
};

EnvironmentLight make_light(const Environment& env, Lighting mode);

Rgb shade(const Rgb& albedo, const Vec3& normal, const EnvironmentLight& light);
Rgb shade(const Rgb& albedo, const Vec3& normal, const Environment& env, Lighting mode);

// Shaded color, depth and ownership. Uncovered pixels show the environment
// seen along the camera ray.
Framebuffer rasterize(std::span<const DrawItem> items, const Camera& camera, const Environment& env,
                      const EnvironmentLight& light, bool cull_backfaces);
// Depth and ownership only; color is left empty.
Framebuffer rasterize_ids(std::span<const DrawItem> items, const Camera& camera, bool cull_backfaces);
// Pixels covered by `item` rendered alone.
std::size_t silhouette_pixels(const DrawItem& item, const Camera& camera, bool cull_backfaces);

// Area average per axis when shrinking, bilinear when enlarging.
RgbImage resample(const RgbImage& image, int width, int height);

// Exposure scale, clamp, sRGB transfer, round to nearest.
Rgb8Image tonemap(const RgbImage& image, double exposure = 1.0);

// Debug maps: depth in millimeters (0 for background, saturating) and ids.
Image<std::uint16_t> depth_millimeters(const Image<float>& depth);

// Base render width for an image, drawn from its own seeded stream.
int choose_base_width(const RenderConfig& config, std::uint64_t seed, std::uint64_t image_index);

// Faces first, then their occluders; heavy occluders use the library plate
// with the occluder's texture.
std::vector<DrawItem> build_draw_list(const SceneSpec& scene, const AssetLibrary& assets);

// Shared per-environment lighting, built once for a library.
class Renderer {
 public:
  Renderer(const AssetLibrary& assets, const RenderConfig& config);

  const RenderConfig& config() const { return config_; }
  const EnvironmentLight& light(std::string_view environment_id) const;

  // Renders at the camera's resolution.
  Framebuffer render(std::span<const DrawItem> items, const Camera& camera, std::string_view environment_id) const;

 private:
  const AssetLibrary& assets_;
  RenderConfig config_;
  std::vector<EnvironmentLight> lights_;
};

}  // namespace facegen
