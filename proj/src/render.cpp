#include "facegen/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "facegen/errors.hpp"
#include "facegen/rng.hpp"

namespace facegen {

namespace {

constexpr double kPi = std::numbers::pi;

// Real SH normalization constants.
const double kY0 = 0.5 * std::sqrt(1.0 / kPi);
const double kY1 = std::sqrt(3.0 / (4.0 * kPi));
const double kY2 = 0.5 * std::sqrt(15.0 / kPi);
const double kY20 = 0.25 * std::sqrt(5.0 / kPi);
const double kY22 = 0.25 * std::sqrt(15.0 / kPi);

std::array<double, 9> sh_basis(const Vec3& d) {
  const double x = d.x(), y = d.y(), z = d.z();
  return {kY0,          kY1 * x,          kY1 * y,          kY1 * z,          kY2 * x * y,
          kY2 * y * z,  kY2 * x * z,      kY20 * (3.0 * y * y - 1.0),      kY22 * (x * x - z * z)};
}

// Antiderivatives in theta of the polar factors, times the sin(theta) Jacobian.
std::array<double, 6> theta_terms(double t) {
  const double s = std::sin(t), c = std::cos(t);
  return {-c, t / 2.0 - std::sin(2.0 * t) / 4.0, s * s / 2.0, -c + c * c * c / 3.0, s * s * s / 3.0, c - c * c * c};
}

std::array<double, 5> phi_terms(double p) {
  const double s = std::sin(p);
  return {p, -std::cos(p), s, s * s / 2.0, -std::sin(2.0 * p) / 2.0};
}

struct ClipVertex {
  Vec3 cam;
  Vec3 bary;  // weights of the original triangle's corners
};

struct Bounds {
  int x0, y0, x1, y1;  // inclusive
};

struct Edge {
  double a, b, c;
  bool owns_zero;
  double at(double x, double y) const { return a * x + b * y + c; }
};

Edge make_edge(double px, double py, double qx, double qy) {
  const double dx = qx - px, dy = qy - py;
  return {-dy, dx, dy * px - dx * py, dy > 0.0 || (dy == 0.0 && dx < 0.0)};
}

bool inside(const Edge& e, double w) { return w > 0.0 || (w == 0.0 && e.owns_zero); }

template <class Fragment>
void raster_triangle(ClipVertex a, ClipVertex b, ClipVertex c, const Camera& camera, const Bounds& bounds,
                     Fragment&& fragment) {
  const double f = camera.focal_px();
  const double cx = camera.image_width / 2.0, cy = camera.image_height / 2.0;
  struct Screen {
    double x, y, inv;
  };
  auto to_screen = [&](const ClipVertex& v) {
    const double d = -v.cam.z();
    return Screen{cx + f * v.cam.x() / d, cy - f * v.cam.y() / d, 1.0 / d};
  };
  Screen sa = to_screen(a), sb = to_screen(b), sc = to_screen(c);
  double area = (sb.x - sa.x) * (sc.y - sa.y) - (sb.y - sa.y) * (sc.x - sa.x);
  if (!(area != 0.0) || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(sb, sc);
    std::swap(b, c);
    area = -area;
  }
  const Edge e0 = make_edge(sb.x, sb.y, sc.x, sc.y);
  const Edge e1 = make_edge(sc.x, sc.y, sa.x, sa.y);
  const Edge e2 = make_edge(sa.x, sa.y, sb.x, sb.y);

  const double minx = std::min({sa.x, sb.x, sc.x}), maxx = std::max({sa.x, sb.x, sc.x});
  const double miny = std::min({sa.y, sb.y, sc.y}), maxy = std::max({sa.y, sb.y, sc.y});
  const int i0 = static_cast<int>(std::max<double>(bounds.x0, std::ceil(minx - 0.5)));
  const int i1 = static_cast<int>(std::min<double>(bounds.x1, std::floor(maxx - 0.5)));
  const int j0 = static_cast<int>(std::max<double>(bounds.y0, std::ceil(miny - 0.5)));
  const int j1 = static_cast<int>(std::min<double>(bounds.y1, std::floor(maxy - 0.5)));

  for (int j = j0; j <= j1; ++j) {
    const double py = j + 0.5;
    for (int i = i0; i <= i1; ++i) {
      const double px = i + 0.5;
      const double w0 = e0.at(px, py);
      if (!inside(e0, w0)) continue;
      const double w1 = e1.at(px, py);
      if (!inside(e1, w1)) continue;
      const double w2 = e2.at(px, py);
      if (!inside(e2, w2)) continue;
      const double l0 = w0 * sa.inv, l1 = w1 * sb.inv, l2 = w2 * sc.inv;
      const double s = l0 + l1 + l2;
      const double depth = area / s;
      const Vec3 bary = (l0 * a.bary + l1 * b.bary + l2 * c.bary) / s;
      fragment(i, j, depth, bary);
    }
  }
}

// Camera-space triangle, clipped against the near plane and fanned.
template <class Fragment>
void raster_clipped(const std::array<Vec3, 3>& cam, const Camera& camera, const Bounds& bounds, Fragment&& fragment) {
  const std::array<ClipVertex, 3> corners = {ClipVertex{cam[0], Vec3(1, 0, 0)}, ClipVertex{cam[1], Vec3(0, 1, 0)},
                                             ClipVertex{cam[2], Vec3(0, 0, 1)}};
  auto depth = [](const ClipVertex& v) { return -v.cam.z(); };
  const int in_front = (depth(corners[0]) > kNearPlane) + (depth(corners[1]) > kNearPlane) + (depth(corners[2]) > kNearPlane);
  if (in_front == 0) return;
  if (in_front == 3) {
    raster_triangle(corners[0], corners[1], corners[2], camera, bounds, fragment);
    return;
  }
  std::array<ClipVertex, 4> poly;
  int n = 0;
  for (int k = 0; k < 3; ++k) {
    const ClipVertex& p = corners[k];
    const ClipVertex& q = corners[(k + 1) % 3];
    const double dp = depth(p), dq = depth(q);
    const bool p_in = dp > kNearPlane, q_in = dq > kNearPlane;
    if (p_in) poly[n++] = p;
    if (p_in != q_in) {
      const double t = (dp - kNearPlane) / (dp - dq);
      poly[n++] = {p.cam + t * (q.cam - p.cam), p.bary + t * (q.bary - p.bary)};
    }
  }
  for (int k = 1; k + 1 < n; ++k) raster_triangle(poly[0], poly[k], poly[k + 1], camera, bounds, fragment);
}

// fragment(x, y, depth, triangle index, barycentric weights)
template <class Fragment>
void raster_item(const DrawItem& item, const Camera& camera, bool cull, const Bounds& bounds, Fragment&& fragment) {
  const TriangleMesh& mesh = *item.mesh;
  std::vector<Vec3> cam(mesh.vertices.size());
  const Mat3 to_cam = camera.orientation.transpose();
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = to_cam * (item.transform.apply(mesh.vertices[i]) - camera.position);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    const std::array<Vec3, 3> v = {cam[tri[0]], cam[tri[1]], cam[tri[2]]};
    if (cull && (v[1] - v[0]).cross(v[2] - v[0]).dot(v[0]) >= 0.0) continue;
    raster_clipped(v, camera, bounds, [&](int x, int y, double depth, const Vec3& bary) { fragment(x, y, depth, t, bary); });
  }
}

Bounds full_bounds(const Camera& camera) { return {0, 0, camera.image_width - 1, camera.image_height - 1}; }

Rgb to_rgb(const Vec3& v) { return {static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z())}; }

Rgb texel(const RgbImage& texture, const Vec2& uv) {
  const int x = std::clamp(static_cast<int>(std::floor(uv.x() * texture.width())), 0, texture.width() - 1);
  const int y = std::clamp(static_cast<int>(std::floor((1.0 - uv.y()) * texture.height())), 0, texture.height() - 1);
  return texture(x, y);
}

struct Tap {
  int index;
  double weight;
};

// Per output sample, the source samples and weights along one axis.
std::vector<std::vector<Tap>> axis_taps(int in, int out) {
  std::vector<std::vector<Tap>> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    if (in == out) {
      taps[o] = {{o, 1.0}};
    } else if (out < in) {
      const double lo = o * scale, hi = (o + 1) * scale;
      for (int i = static_cast<int>(std::floor(lo)); i < static_cast<int>(std::ceil(hi)) && i < in; ++i) {
        const double w = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
        if (w > 0.0) taps[o].push_back({i, w / scale});
      }
    } else {
      const double src = (o + 0.5) * scale - 0.5;
      const int i0 = static_cast<int>(std::floor(src));
      const double t = src - i0;
      taps[o] = {{std::clamp(i0, 0, in - 1), 1.0 - t}, {std::clamp(i0 + 1, 0, in - 1), t}};
    }
  }
  return taps;
}

}  // namespace

ShCoefficients project_sh(const RgbImage& radiance) {
  const int w = radiance.width(), h = radiance.height();
  std::vector<std::array<double, 5>> phi(w);
  for (int x = 0; x < w; ++x) {
    const auto lo = phi_terms(2.0 * kPi * (static_cast<double>(x) / w - 0.5));
    const auto hi = phi_terms(2.0 * kPi * (static_cast<double>(x + 1) / w - 0.5));
    for (int k = 0; k < 5; ++k) phi[x][k] = hi[k] - lo[k];
  }
  ShCoefficients sh{};
  for (auto& c : sh) c.setZero();
  for (int y = 0; y < h; ++y) {
    const auto lo = theta_terms(kPi * y / h);
    const auto hi = theta_terms(kPi * (y + 1) / h);
    std::array<double, 6> t;
    for (int k = 0; k < 6; ++k) t[k] = hi[k] - lo[k];
    for (int x = 0; x < w; ++x) {
      const auto& p = phi[x];
      const std::array<double, 9> weight = {kY0 * t[0] * p[0],  kY1 * t[1] * p[1],  kY1 * t[2] * p[0],
                                            -kY1 * t[1] * p[2], kY2 * t[4] * p[1],  -kY2 * t[4] * p[2],
                                            -kY2 * t[3] * p[3], kY20 * t[5] * p[0], kY22 * t[3] * p[4]};
      const Rgb& c = radiance(x, y);
      const Vec3 value(c.r, c.g, c.b);
      for (int k = 0; k < 9; ++k) sh[k] += weight[k] * value;
    }
  }
  return sh;
}

Vec3 sh_irradiance(const ShCoefficients& sh, const Vec3& normal) {
  static const std::array<double, 9> band = {kPi, 2.0 * kPi / 3.0, 2.0 * kPi / 3.0, 2.0 * kPi / 3.0, kPi / 4.0,
                                             kPi / 4.0, kPi / 4.0, kPi / 4.0, kPi / 4.0};
  const auto y = sh_basis(normal);
  Vec3 e = Vec3::Zero();
  for (int k = 0; k < 9; ++k) e += band[k] * y[k] * sh[k];
  return (e / kPi).cwiseMax(0.0);
}

Vec3 mean_radiance(const RgbImage& radiance) {
  const int w = radiance.width(), h = radiance.height();
  Vec3 sum = Vec3::Zero();
  for (int y = 0; y < h; ++y) {
    const double band = (std::cos(kPi * y / h) - std::cos(kPi * (y + 1) / h)) * 2.0 * kPi / w;
    for (int x = 0; x < w; ++x) {
      const Rgb& c = radiance(x, y);
      sum += band * Vec3(c.r, c.g, c.b);
    }
  }
  return sum / (4.0 * kPi);
}

Rgb env_lookup(const RgbImage& radiance, const Vec3& direction) {
  const int w = radiance.width(), h = radiance.height();
  const double u = 0.5 + std::atan2(direction.x(), -direction.z()) / (2.0 * kPi);
  const double v = std::acos(std::clamp(direction.y(), -1.0, 1.0)) / kPi;
  const double px = u * w - 0.5, py = v * h - 0.5;
  const double fx = std::floor(px), fy = std::floor(py);
  const float tx = static_cast<float>(px - fx), ty = static_cast<float>(py - fy);
  auto wrap = [w](long x) { return static_cast<int>(((x % w) + w) % w); };
  const int x0 = wrap(static_cast<long>(fx)), x1 = wrap(static_cast<long>(fx) + 1);
  const int y0 = std::clamp(static_cast<int>(fy), 0, h - 1), y1 = std::clamp(static_cast<int>(fy) + 1, 0, h - 1);
  const Rgb top = radiance(x0, y0) * (1.0f - tx) + radiance(x1, y0) * tx;
  const Rgb bottom = radiance(x0, y1) * (1.0f - tx) + radiance(x1, y1) * tx;
  return top * (1.0f - ty) + bottom * ty;
}

EnvironmentLight make_light(const Environment& env, Lighting mode) {
  EnvironmentLight light;
  light.mode = mode;
  if (mode == Lighting::sh_irradiance) light.sh = project_sh(env.radiance);
  else light.mean = mean_radiance(env.radiance);
  return light;
}

Rgb shade(const Rgb& albedo, const Vec3& normal, const EnvironmentLight& light) {
  return albedo * to_rgb(light.irradiance(normal));
}

Rgb shade(const Rgb& albedo, const Vec3& normal, const Environment& env, Lighting mode) {
  return shade(albedo, normal, make_light(env, mode));
}

Framebuffer rasterize(std::span<const DrawItem> items, const Camera& camera, const Environment& env,
                      const EnvironmentLight& light, bool cull_backfaces) {
  const int w = camera.image_width, h = camera.image_height;
  Framebuffer fb;
  fb.color = RgbImage(w, h);
  fb.depth = Image<float>(w, h, kInfiniteDepth);
  fb.instance_id = Image<std::uint16_t>(w, h, kNoInstance);
  for (const DrawItem& item : items) {
    const TriangleMesh& mesh = *item.mesh;
    const RgbImage& texture = item.texture ? *item.texture : mesh.texture;
    const Mat3& rotation = item.transform.rotation;
    raster_item(item, camera, cull_backfaces, full_bounds(camera),
                [&](int x, int y, double depth, std::size_t t, const Vec3& bary) {
                  float& z = fb.depth(x, y);
                  if (!(depth < z)) return;
                  z = static_cast<float>(depth);
                  fb.instance_id(x, y) = item.instance;
                  const Triangle& tri = mesh.triangles[t];
                  const Vec2 uv = bary[0] * mesh.uv[tri[0]] + bary[1] * mesh.uv[tri[1]] + bary[2] * mesh.uv[tri[2]];
                  Vec3 n = mesh.normals.empty()
                               ? (mesh.vertices[tri[1]] - mesh.vertices[tri[0]]).cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]])
                               : Vec3(bary[0] * mesh.normals[tri[0]] + bary[1] * mesh.normals[tri[1]] +
                                      bary[2] * mesh.normals[tri[2]]);
                  n = rotation * n;
                  const double len = n.norm();
                  n = len > 0.0 ? Vec3(n / len) : Vec3(0, 0, 1);
                  fb.color(x, y) = shade(texel(texture, uv), n, light);
                });
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (fb.instance_id(x, y) == kNoInstance) fb.color(x, y) = env_lookup(env, camera.ray_direction(x + 0.5, y + 0.5));
  return fb;
}

Framebuffer rasterize_ids(std::span<const DrawItem> items, const Camera& camera, bool cull_backfaces) {
  const int w = camera.image_width, h = camera.image_height;
  Framebuffer fb;
  fb.depth = Image<float>(w, h, kInfiniteDepth);
  fb.instance_id = Image<std::uint16_t>(w, h, kNoInstance);
  for (const DrawItem& item : items) {
    raster_item(item, camera, cull_backfaces, full_bounds(camera),
                [&](int x, int y, double depth, std::size_t, const Vec3&) {
                  float& z = fb.depth(x, y);
                  if (!(depth < z)) return;
                  z = static_cast<float>(depth);
                  fb.instance_id(x, y) = item.instance;
                });
  }
  return fb;
}

std::size_t silhouette_pixels(const DrawItem& item, const Camera& camera, bool cull_backfaces) {
  Bounds bounds = full_bounds(camera);
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  bool all_in_front = true;
  for (const Vec3& v : item.mesh->vertices) {
    const Projection p = project(camera, item.transform.apply(v));
    if (p.behind_camera) {
      all_in_front = false;
      break;
    }
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  if (all_in_front) {
    bounds.x0 = static_cast<int>(std::clamp(std::floor(x0) - 1.0, 0.0, static_cast<double>(bounds.x1)));
    bounds.y0 = static_cast<int>(std::clamp(std::floor(y0) - 1.0, 0.0, static_cast<double>(bounds.y1)));
    bounds.x1 = static_cast<int>(std::clamp(std::ceil(x1) + 1.0, -1.0, static_cast<double>(bounds.x1)));
    bounds.y1 = static_cast<int>(std::clamp(std::ceil(y1) + 1.0, -1.0, static_cast<double>(bounds.y1)));
    if (x1 < 0.0 || y1 < 0.0) return 0;
  }
  if (bounds.x1 < bounds.x0 || bounds.y1 < bounds.y0) return 0;
  const int bw = bounds.x1 - bounds.x0 + 1;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(bw) * (bounds.y1 - bounds.y0 + 1), 0);
  std::size_t count = 0;
  raster_item(item, camera, cull_backfaces, bounds, [&](int x, int y, double, std::size_t, const Vec3&) {
    std::uint8_t& m = mask[static_cast<std::size_t>(y - bounds.y0) * bw + (x - bounds.x0)];
    if (!m) {
      m = 1;
      ++count;
    }
  });
  return count;
}

RgbImage resample(const RgbImage& image, int width, int height) {
  if (width == image.width() && height == image.height()) return image;
  const auto tx = axis_taps(image.width(), width);
  const auto ty = axis_taps(image.height(), height);
  std::vector<Vec3> horizontal(static_cast<std::size_t>(width) * image.height());
  for (int y = 0; y < image.height(); ++y) {
    const auto row = image.row(y);
    for (int x = 0; x < width; ++x) {
      Vec3 sum = Vec3::Zero();
      for (const Tap& t : tx[x]) sum += t.weight * Vec3(row[t.index].r, row[t.index].g, row[t.index].b);
      horizontal[static_cast<std::size_t>(y) * width + x] = sum;
    }
  }
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Vec3 sum = Vec3::Zero();
      for (const Tap& t : ty[y]) sum += t.weight * horizontal[static_cast<std::size_t>(t.index) * width + x];
      out(x, y) = to_rgb(sum);
    }
  }
  return out;
}

Rgb8Image tonemap(const RgbImage& image, double exposure) {
  Rgb8Image out(image.width(), image.height());
  const auto src = image.pixels();
  const auto dst = out.pixels();
  const auto e = static_cast<float>(exposure);
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = {linear_to_srgb8(src[i].r * e), linear_to_srgb8(src[i].g * e), linear_to_srgb8(src[i].b * e)};
  return out;
}

Image<std::uint16_t> depth_millimeters(const Image<float>& depth) {
  Image<std::uint16_t> out(depth.width(), depth.height());
  const auto src = depth.pixels();
  const auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = std::isfinite(src[i]) ? static_cast<std::uint16_t>(std::clamp(std::lround(src[i] * 1000.0), 0L, 65535L)) : 0;
  return out;
}

int choose_base_width(const RenderConfig& config, std::uint64_t seed, std::uint64_t image_index) {
  if (config.base_resolutions.empty()) return config.target_width;
  Rng rng(mix_seed(seed, image_index, 1));
  return config.base_resolutions[uniform_int(rng, 0, static_cast<int>(config.base_resolutions.size()) - 1)];
}

std::vector<DrawItem> build_draw_list(const SceneSpec& scene, const AssetLibrary& assets) {
  std::vector<DrawItem> items;
  for (std::size_t k = 0; k < scene.faces.size(); ++k) {
    const FaceInstance& face = scene.faces[k];
    const FaceModel& model = assets.model(face.model_id);
    items.push_back({&model.mesh, face_transform(face, model, scene.camera), face_instance_id(k), nullptr});
  }
  for (std::size_t k = 0; k < scene.faces.size(); ++k) {
    const FaceInstance& face = scene.faces[k];
    const FaceModel& model = assets.model(face.model_id);
    for (std::size_t j = 0; j < face.occluders.size(); ++j) {
      const OccluderPlacement& p = face.occluders[j];
      const OccluderMesh& occ = assets.occluder(p.occluder_id);
      const RigidTransform t = occluder_transform(p, face, model, scene.camera);
      if (p.heavy) items.push_back({&assets.heavy_plate(), t, occluder_instance_id(k, j), &occ.mesh.texture});
      else items.push_back({&occ.mesh, t, occluder_instance_id(k, j), nullptr});
    }
  }
  return items;
}

Renderer::Renderer(const AssetLibrary& assets, const RenderConfig& config) : assets_(assets), config_(config) {
  lights_.reserve(assets.environments().size());
  for (const Environment& env : assets.environments()) lights_.push_back(make_light(env, config.lighting));
}

const EnvironmentLight& Renderer::light(std::string_view environment_id) const {
  return lights_[assets_.environment_index(environment_id)];
}

Framebuffer Renderer::render(std::span<const DrawItem> items, const Camera& camera,
                             std::string_view environment_id) const {
  return rasterize(items, camera, assets_.environment(environment_id), light(environment_id), config_.cull_backfaces);
}

}  // namespace facegen
