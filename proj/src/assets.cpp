#include "facegen/assets.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "facegen/errors.hpp"
#include "facegen/geometry.hpp"
#include "facegen/obj.hpp"
#include "facegen/rgbe.hpp"
#include "facegen/rng.hpp"

namespace facegen {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Mesh construction helpers. All shapes wind counter-clockwise seen from
// outside.

void add_triangle(TriangleMesh& mesh, const Vec3& a, const Vec3& b, const Vec3& c, const Vec2& ta = Vec2::Zero(),
                  const Vec2& tb = Vec2::Zero(), const Vec2& tc = Vec2::Zero()) {
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), {a, b, c});
  mesh.uv.insert(mesh.uv.end(), {ta, tb, tc});
  mesh.triangles.push_back({base, base + 1, base + 2});
}

void add_box(TriangleMesh& mesh, const Vec3& center, const Vec3& half) {
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {1, -1}) {
      Vec3 n = Vec3::Zero();
      n(axis) = sign;
      Vec3 u = Vec3::Zero();
      u((axis + 1) % 3) = 1.0;
      const Vec3 v = n.cross(u);
      const Vec3 c = center + n.cwiseProduct(half);
      const Vec3 du = u.cwiseProduct(half);
      const Vec3 dv = v.cwiseProduct(half);
      const Vec3 p0 = c - du - dv, p1 = c + du - dv, p2 = c + du + dv, p3 = c - du + dv;
      add_triangle(mesh, p0, p1, p2);
      add_triangle(mesh, p0, p2, p3);
    }
  }
}

// Surface of revolution sampled on a (rows+1) x (cols+1) grid. `point(t, phi)`
// walks from top (t = 0) to bottom (t = 1); phi runs around the +Y axis.
template <class PointFn>
void add_grid_surface(TriangleMesh& mesh, int rows, int cols, PointFn point, double t_max = 1.0) {
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (int i = 0; i <= rows; ++i) {
    for (int j = 0; j <= cols; ++j) {
      const double t = t_max * i / rows;
      const double phi = 2.0 * kPi * (static_cast<double>(j) / cols - 0.5);
      mesh.vertices.push_back(point(t, phi));
      mesh.uv.emplace_back(static_cast<double>(j) / cols, 1.0 - static_cast<double>(i) / rows);
    }
  }
  auto at = [&](int i, int j) { return base + static_cast<std::uint32_t>(i * (cols + 1) + j); };
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const auto a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1), d = at(i, j + 1);
      const bool top_pole = (mesh.vertices[a] - mesh.vertices[d]).norm() < 1e-12;
      const bool bottom_pole = (mesh.vertices[b] - mesh.vertices[c]).norm() < 1e-12;
      if (!bottom_pole) mesh.triangles.push_back({a, b, c});
      if (!top_pole) mesh.triangles.push_back({a, c, d});
    }
  }
}

void add_cylinder(TriangleMesh& mesh, const Vec3& top_center, double radius, double height, int segments) {
  add_grid_surface(mesh, 1, segments, [&](double t, double phi) {
    return Vec3(top_center.x() + radius * std::sin(phi), top_center.y() - t * height,
                top_center.z() + radius * std::cos(phi));
  });
  for (int j = 0; j < segments; ++j) {
    const double a0 = 2.0 * kPi * j / segments;
    const double a1 = 2.0 * kPi * (j + 1) / segments;
    const Vec3 r0(radius * std::sin(a0), 0.0, radius * std::cos(a0));
    const Vec3 r1(radius * std::sin(a1), 0.0, radius * std::cos(a1));
    const Vec3 bottom = top_center - Vec3(0.0, height, 0.0);
    add_triangle(mesh, top_center, top_center + r0, top_center + r1);
    add_triangle(mesh, bottom, bottom + r1, bottom + r0);
  }
}

RgbImage solid_texture(Rgb color) { return RgbImage(1, 1, color); }

Rgb srgb(double r, double g, double b) {
  auto lin = [](double c) { return static_cast<float>(c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4)); };
  return {lin(r), lin(g), lin(b)};
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  const auto s = static_cast<float>(t);
  return {a.r + (b.r - a.r) * s, a.g + (b.g - a.g) * s, a.b + (b.b - a.b) * s};
}

// ---------------------------------------------------------------------------
// Procedural head.

struct HeadShape {
  Vec3 semi{0.10, 0.14, 0.12};
  std::array<double, 3> azimuth_terms{};
  std::array<double, 2> polar_terms{};

  double radial(double theta, double phi) const {
    const double nose_t = (theta - 0.56 * kPi) / (0.05 * kPi);
    const double nose_p = phi / (0.06 * kPi);
    double r = 1.0 + 0.12 * std::exp(-(nose_t * nose_t + nose_p * nose_p));
    for (int m = 0; m < 3; ++m) r += azimuth_terms[m] * std::cos((m + 1) * phi) * std::sin(theta);
    for (int k = 0; k < 2; ++k) r += polar_terms[k] * std::cos((k + 2) * theta);
    return r;
  }

  Vec3 point(double theta, double phi) const {
    const Vec3 dir(std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi));
    return radial(theta, phi) * semi.cwiseProduct(dir);
  }
};

struct AngularLandmark {
  double theta;
  double phi;
  Region region;
};

// Mirror-symmetric in phi so the landmark centroid lies on the head's x = 0 plane.
std::vector<AngularLandmark> head_landmark_layout() {
  std::vector<AngularLandmark> out;
  for (int k = 0; k < 20; ++k) {
    const double a = 2.0 * kPi * k / 20;
    out.push_back({0.52 * kPi - 0.30 * kPi * std::cos(a), 0.42 * kPi * std::sin(a), Region::outline});
  }
  for (int side : {-1, 1})
    for (int k = 0; k < 6; ++k) {
      const double b = 2.0 * kPi * k / 6;
      out.push_back(
          {0.45 * kPi + 0.03 * kPi * std::sin(b), side * (0.17 * kPi + 0.06 * kPi * std::cos(b)), Region::eye});
    }
  for (int k = 0; k < 10; ++k) {
    const double b = 2.0 * kPi * k / 10;
    out.push_back({0.68 * kPi + 0.03 * kPi * std::sin(b), 0.10 * kPi * std::cos(b), Region::mouth});
  }
  for (double phi : {0.08, 0.25})
    for (int side : {-1, 1}) out.push_back({0.30 * kPi, side * phi * kPi, Region::head});
  for (double phi : {0.12, 0.35})
    for (int side : {-1, 1}) out.push_back({0.20 * kPi, side * phi * kPi, Region::head});
  return out;
}

RgbImage paint_head_texture(Rng& rng) {
  static const std::array<Rgb, 5> tones = {srgb(0.96, 0.80, 0.69), srgb(0.89, 0.72, 0.57), srgb(0.78, 0.57, 0.44),
                                           srgb(0.63, 0.45, 0.33), srgb(0.47, 0.33, 0.23)};
  const Rgb skin = mix(tones[uniform_int(rng, 0, 4)], srgb(0.9, 0.7, 0.6), uniform(rng, 0.0, 0.15));
  const Rgb hair = mix(srgb(0.08, 0.06, 0.05), srgb(0.55, 0.40, 0.25), uniform(rng, 0.0, 1.0));
  const Rgb lips = mix(skin, srgb(0.70, 0.30, 0.30), 0.6);
  const Rgb iris = mix(srgb(0.25, 0.15, 0.08), srgb(0.30, 0.45, 0.60), uniform(rng, 0.0, 1.0));
  const Rgb sclera = srgb(0.92, 0.90, 0.88);
  const double hairline = uniform(rng, 0.20, 0.28);

  constexpr int kWidth = 256;
  constexpr int kHeight = 128;
  RgbImage tex(kWidth, kHeight);
  for (int y = 0; y < kHeight; ++y) {
    const double theta = kPi * (y + 0.5) / kHeight;
    for (int x = 0; x < kWidth; ++x) {
      const double phi = 2.0 * kPi * ((x + 0.5) / kWidth - 0.5);
      const double ap = std::abs(phi);
      Rgb c = skin;
      const double eye_t = (theta - 0.45 * kPi) / (0.035 * kPi);
      const double eye_p = (ap - 0.17 * kPi) / (0.065 * kPi);
      const double eye = eye_t * eye_t + eye_p * eye_p;
      const double mouth_t = (theta - 0.68 * kPi) / (0.03 * kPi);
      const double mouth_p = phi / (0.10 * kPi);
      if (eye < 1.0) c = eye < 0.3 ? iris : sclera;
      else if (std::abs(theta - 0.40 * kPi) < 0.012 * kPi && std::abs(ap - 0.17 * kPi) < 0.07 * kPi) c = hair;
      else if (mouth_t * mouth_t + mouth_p * mouth_p < 1.0) c = lips;
      if (theta < (hairline + 0.12 * ap / kPi) * kPi || (ap > 0.6 * kPi && theta < 0.75 * kPi)) c = hair;
      tex(x, y) = c;
    }
  }
  return tex;
}

// ---------------------------------------------------------------------------
// Procedural environments.

Rgb outdoor_radiance(const Vec3& d, const Vec3& sun, const Rgb& zenith, const Rgb& horizon, const Rgb& ground,
                     const std::vector<std::array<double, 3>>& buildings, const std::vector<Rgb>& building_colors) {
  if (d.y() >= 0.0) {
    const double phi = std::atan2(d.x(), -d.z());
    for (std::size_t k = 0; k < buildings.size(); ++k) {
      const auto& [start, width, elevation] = buildings[k];
      double delta = std::remainder(phi - start, 2.0 * kPi);
      if (delta >= 0.0 && delta < width && d.y() < std::sin(elevation)) return building_colors[k];
    }
    if (d.dot(sun) > std::cos(2.5 * kPi / 180.0)) return Rgb{50.0f, 47.0f, 42.0f};
    return mix(horizon, zenith, std::sqrt(d.y()));
  }
  return ground * static_cast<float>(0.6 + 0.4 * (1.0 + d.y()));
}

Rgb indoor_radiance(const Vec3& d, const std::array<Rgb, 6>& walls, const Vec3& lamp) {
  if (d.dot(lamp) > std::cos(8.0 * kPi / 180.0)) return Rgb{12.0f, 11.5f, 10.0f};
  const Vec3 a = d.cwiseAbs();
  int axis = 0;
  if (a.y() > a(axis)) axis = 1;
  if (a.z() > a(axis)) axis = 2;
  const int face = axis * 2 + (d(axis) < 0.0 ? 1 : 0);
  // Darken toward the corners of each wall.
  const double edge = a(axis) / a.norm();
  return walls[face] * static_cast<float>(0.4 + 0.6 * edge);
}

// ---------------------------------------------------------------------------
// Landmark file parsing.

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& source, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || !std::isfinite(v)) throw ParseError(source, line, "bad number '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, const std::string& source, int line) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size()) throw ParseError(source, line, "bad integer '" + tok + "'");
  return static_cast<int>(v);
}

template <class T>
std::map<std::string, std::size_t, std::less<>> index_ids(const std::vector<T>& items, const char* what) {
  std::map<std::string, std::size_t, std::less<>> ids;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!ids.emplace(items[i].id, i).second) throw ValidationError(std::string("duplicate ") + what + " id " + items[i].id);
  return ids;
}

std::size_t lookup(const std::map<std::string, std::size_t, std::less<>>& ids, std::string_view id, const char* what) {
  const auto it = ids.find(id);
  if (it == ids.end()) throw ValidationError(std::string("unknown ") + what + " id '" + std::string(id) + "'");
  return it->second;
}

FaceModel load_model_entry(const ModelEntry& entry) {
  FaceModel model = entry.procedural ? make_test_head(entry.procedural->first, entry.procedural->second)
                                     : load_face_model(entry.mesh, entry.landmarks, entry.id);
  model.id = entry.id;
  return model;
}

Environment load_environment_entry(const EnvironmentEntry& entry) {
  Environment env = entry.procedural_seed ? make_procedural_environment(*entry.procedural_seed)
                                          : load_environment(entry.path, entry.id, entry.indoor);
  env.id = entry.id;
  if (!entry.procedural_seed) env.is_indoor = entry.indoor;
  return env;
}

OccluderMesh load_occluder_entry(const OccluderEntry& entry, const FaceModel& reference) {
  return entry.procedural ? make_procedural_occluder(entry.kind, reference, entry.id)
                          : load_occluder(entry.mesh, entry.kind, entry.id);
}

const ModelEntry& anchor_entry(const AssetManifest& manifest) {
  if (manifest.models.empty()) throw EmptyPoolError("asset manifest lists no models");
  if (manifest.anchor.empty()) return manifest.models.front();
  for (const auto& m : manifest.models)
    if (m.id == manifest.anchor) return m;
  throw ValidationError("anchor model '" + manifest.anchor + "' is not listed");
}

}  // namespace

// ---------------------------------------------------------------------------
// model.hpp

std::string_view to_string(Region region) {
  switch (region) {
    case Region::head: return "head";
    case Region::eye: return "eye";
    case Region::mouth: return "mouth";
    case Region::outline: return "outline";
  }
  return "outline";
}

std::optional<Region> parse_region(std::string_view text) {
  if (text == "head") return Region::head;
  if (text == "eye") return Region::eye;
  if (text == "mouth") return Region::mouth;
  if (text == "outline") return Region::outline;
  return std::nullopt;
}

std::string_view to_string(OccluderKind kind) {
  switch (kind) {
    case OccluderKind::sunglasses: return "sunglasses";
    case OccluderKind::hat: return "hat";
    case OccluderKind::helmet: return "helmet";
    case OccluderKind::generic: return "generic";
  }
  return "generic";
}

std::optional<OccluderKind> parse_occluder_kind(std::string_view text) {
  if (text == "sunglasses") return OccluderKind::sunglasses;
  if (text == "hat") return OccluderKind::hat;
  if (text == "helmet") return OccluderKind::helmet;
  if (text == "generic") return OccluderKind::generic;
  return std::nullopt;
}

std::optional<Region> anchor_region_for(OccluderKind kind) {
  switch (kind) {
    case OccluderKind::sunglasses: return Region::eye;
    case OccluderKind::hat:
    case OccluderKind::helmet: return Region::head;
    case OccluderKind::generic: return std::nullopt;
  }
  return std::nullopt;
}

void TriangleMesh::compute_normals() {
  normals.assign(vertices.size(), Vec3::Zero());
  for (const Triangle& t : triangles) {
    const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    for (auto i : t) normals[i] += n;
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
  }
}

Vec3 TriangleMesh::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& v : vertices) sum += v;
  return vertices.empty() ? sum : Vec3(sum / static_cast<double>(vertices.size()));
}

double TriangleMesh::bounding_radius(const Vec3& center) const {
  double r = 0.0;
  for (const Vec3& v : vertices) r = std::max(r, (v - center).norm());
  return r;
}

Vec3 FaceModel::landmark_centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const Landmark& l : landmarks) sum += l.position;
  return sum / static_cast<double>(kLandmarkCount);
}

std::vector<Vec3> FaceModel::landmark_positions() const {
  std::vector<Vec3> out;
  out.reserve(kLandmarkCount);
  for (const Landmark& l : landmarks) out.push_back(l.position);
  return out;
}

// ---------------------------------------------------------------------------
// Landmarks.

LandmarkSet parse_landmarks(std::istream& in, const std::string& source) {
  std::string raw;
  int line_no = 0;
  std::optional<int> declared;
  std::vector<std::pair<Landmark, int>> entries;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const auto tokens = split_ws(raw);
    if (tokens.empty()) continue;
    if (!declared) {
      if (tokens.size() != 2 || tokens[0] != "count") throw ParseError(source, line_no, "expected header 'count 50'");
      declared = parse_int(tokens[1], source, line_no);
      continue;
    }
    if (tokens.size() != 5) throw ParseError(source, line_no, "expected 'index x y z region'");
    Landmark l;
    l.index = parse_int(tokens[0], source, line_no);
    l.position = Vec3(parse_double(tokens[1], source, line_no), parse_double(tokens[2], source, line_no),
                      parse_double(tokens[3], source, line_no));
    const auto region = parse_region(tokens[4]);
    if (!region) throw ParseError(source, line_no, "unknown region '" + tokens[4] + "'");
    l.region = *region;
    entries.emplace_back(l, line_no);
  }
  if (!declared) throw ParseError(source, line_no, "missing 'count' header");
  if (*declared != kLandmarkCount)
    throw ValidationError(source + ": expected 50 landmarks, header declares " + std::to_string(*declared));
  if (entries.size() != kLandmarkCount)
    throw ValidationError(source + ": expected 50 landmarks, found " + std::to_string(entries.size()));

  LandmarkSet out;
  std::array<bool, kLandmarkCount> seen{};
  for (const auto& [l, line] : entries) {
    if (l.index < 0 || l.index >= kLandmarkCount)
      throw ValidationError(source + ":" + std::to_string(line) + ": landmark index " + std::to_string(l.index) +
                            " out of range 0..49");
    if (seen[l.index])
      throw ValidationError(source + ":" + std::to_string(line) + ": duplicate landmark index " +
                            std::to_string(l.index));
    seen[l.index] = true;
    out[l.index] = l;
  }
  return out;
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_landmarks(in, path.string());
}

void write_landmarks(std::ostream& out, const LandmarkSet& landmarks) {
  out.precision(17);
  out << "count " << kLandmarkCount << '\n';
  for (const Landmark& l : landmarks)
    out << l.index << ' ' << l.position.x() << ' ' << l.position.y() << ' ' << l.position.z() << ' '
        << to_string(l.region) << '\n';
}

// ---------------------------------------------------------------------------
// Validation.

void validate_mesh(const TriangleMesh& mesh, const std::string& what) {
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw ValidationError(what + ": degenerate mesh (empty)");
  if (mesh.uv.size() != mesh.vertices.size())
    throw ValidationError(what + ": texture coordinate count does not match vertex count");
  if (mesh.texture.empty()) throw ValidationError(what + ": missing texture");
  for (const Vec3& v : mesh.vertices)
    if (!v.allFinite()) throw ValidationError(what + ": non-finite vertex");
  const auto count = mesh.vertices.size();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle& t = mesh.triangles[i];
    if (t[0] >= count || t[1] >= count || t[2] >= count)
      throw ValidationError(what + ": triangle " + std::to_string(i) + " index exceeds vertex count");
    const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    const Vec3 e3 = mesh.vertices[t[2]] - mesh.vertices[t[1]];
    const double longest = std::max({e1.squaredNorm(), e2.squaredNorm(), e3.squaredNorm()});
    if (!(e1.cross(e2).norm() > 1e-10 * longest) || longest == 0.0)
      throw ValidationError(what + ": degenerate mesh, triangle " + std::to_string(i) + " has zero area");
  }
}

void validate_face_model(const FaceModel& model) {
  const std::string what = model.id.empty() ? std::string("face model") : "face model " + model.id;
  validate_mesh(model.mesh, what);
  const Vec3 center = model.mesh.centroid();
  const double limit = 1.5 * model.mesh.bounding_radius(center);
  for (int i = 0; i < kLandmarkCount; ++i) {
    const Landmark& l = model.landmarks[i];
    if (l.index != i) throw ValidationError(what + ": expected 50 landmarks with distinct indices 0..49");
    if (!l.position.allFinite()) throw ValidationError(what + ": non-finite landmark " + std::to_string(i));
    if ((l.position - center).norm() > limit)
      throw ValidationError(what + ": landmark " + std::to_string(i) + " lies outside 1.5x the bounding sphere");
  }
}

void validate_environment(const Environment& env) {
  const int w = env.radiance.width();
  const int h = env.radiance.height();
  if (w != 2 * h || h == 0)
    throw ValidationError((env.id.empty() ? std::string("environment") : env.id) + ": not equirectangular 2:1 (" +
                          std::to_string(w) + "x" + std::to_string(h) + ")");
  for (const Rgb& c : env.radiance.pixels())
    if (!(std::isfinite(c.r) && std::isfinite(c.g) && std::isfinite(c.b)) || c.r < 0.0f || c.g < 0.0f || c.b < 0.0f)
      throw ValidationError(env.id + ": radiance must be finite and non-negative");
}

// ---------------------------------------------------------------------------
// Loaders.

FaceModel load_face_model(const std::filesystem::path& mesh_path, const std::filesystem::path& landmark_path,
                          std::string id) {
  FaceModel model;
  model.id = id.empty() ? mesh_path.stem().string() : std::move(id);
  model.mesh = load_textured_mesh(mesh_path);
  model.landmarks = read_landmarks(landmark_path);
  validate_face_model(model);
  model.mesh.compute_normals();
  return model;
}

void write_face_model(const FaceModel& model, const std::filesystem::path& dir, const std::string& stem) {
  write_textured_mesh(model.mesh, dir, stem);
  std::ofstream out(dir / (stem + ".lmk"));
  if (!out) throw IoError("cannot write " + (dir / (stem + ".lmk")).string());
  write_landmarks(out, model.landmarks);
}

Environment load_environment(const std::filesystem::path& hdr_path, std::string id, bool is_indoor) {
  Environment env;
  env.id = id.empty() ? hdr_path.stem().string() : std::move(id);
  env.radiance = read_hdr(hdr_path);
  env.is_indoor = is_indoor;
  validate_environment(env);
  return env;
}

FaceModel make_test_head(std::uint64_t seed, int detail) {
  if (detail < 1) throw ValidationError("test head detail must be at least 1");
  Rng rng(mix_seed(seed, 0, 0x68656164));
  HeadShape shape;
  for (double& c : shape.azimuth_terms) c = uniform(rng, -0.015, 0.015);
  for (double& c : shape.polar_terms) c = uniform(rng, -0.01, 0.01);

  FaceModel model;
  model.id = "head-" + std::to_string(seed);
  add_grid_surface(model.mesh, 4 * detail, 8 * detail,
                   [&](double t, double phi) { return shape.point(t * kPi, phi); });
  model.mesh.texture = paint_head_texture(rng);

  const auto layout = head_landmark_layout();
  for (int i = 0; i < kLandmarkCount; ++i)
    model.landmarks[i] = {i, shape.point(layout[i].theta, layout[i].phi), layout[i].region};

  validate_face_model(model);
  model.mesh.compute_normals();
  return model;
}

Environment make_procedural_environment(std::uint64_t seed, int width) {
  Rng rng(mix_seed(seed, 0, 0x656e76));
  Environment env;
  env.id = "env-" + std::to_string(seed);
  env.is_indoor = seed % 3 == 2;
  const int height = width / 2;
  env.radiance = RgbImage(width, height);

  const double sun_az = uniform(rng, -kPi, kPi);
  const double sun_el = uniform(rng, 0.15, 1.2);
  const Vec3 sun(std::cos(sun_el) * std::sin(sun_az), std::sin(sun_el), -std::cos(sun_el) * std::cos(sun_az));
  const Rgb zenith = mix(srgb(0.25, 0.45, 0.85), srgb(0.55, 0.60, 0.70), uniform(rng, 0.0, 1.0)) * 1.2f;
  const Rgb horizon = mix(srgb(0.80, 0.85, 0.95), srgb(0.95, 0.80, 0.60), uniform(rng, 0.0, 0.6)) * 1.5f;
  const Rgb ground = mix(srgb(0.30, 0.40, 0.20), srgb(0.45, 0.40, 0.35), uniform(rng, 0.0, 1.0));
  std::vector<std::array<double, 3>> buildings;
  std::vector<Rgb> building_colors;
  const int n_buildings = uniform_int(rng, 0, 8);
  for (int k = 0; k < n_buildings; ++k) {
    buildings.push_back({uniform(rng, -kPi, kPi), uniform(rng, 0.1, 0.6), uniform(rng, 0.05, 0.5)});
    building_colors.push_back(mix(srgb(0.3, 0.3, 0.32), srgb(0.7, 0.6, 0.5), uniform(rng, 0.0, 1.0)));
  }
  std::array<Rgb, 6> walls{};
  for (Rgb& w : walls)
    w = mix(srgb(0.55, 0.50, 0.45), srgb(uniform(rng, 0.2, 0.9), uniform(rng, 0.2, 0.9), uniform(rng, 0.2, 0.9)),
            0.5);
  const Vec3 lamp = Vec3(uniform(rng, -0.3, 0.3), 1.0, uniform(rng, -0.3, 0.3)).normalized();

  for (int y = 0; y < height; ++y) {
    const double theta = kPi * (y + 0.5) / height;
    for (int x = 0; x < width; ++x) {
      const double phi = 2.0 * kPi * ((x + 0.5) / width - 0.5);
      const Vec3 d(std::sin(theta) * std::sin(phi), std::cos(theta), -std::sin(theta) * std::cos(phi));
      env.radiance(x, y) = env.is_indoor ? indoor_radiance(d, walls, lamp)
                                         : outdoor_radiance(d, sun, zenith, horizon, ground, buildings, building_colors);
    }
  }
  return env;
}

TriangleMesh make_plate_mesh() {
  TriangleMesh plate;
  const Vec3 p0(-0.5, -0.5, 0.0), p1(0.5, -0.5, 0.0), p2(0.5, 0.5, 0.0), p3(-0.5, 0.5, 0.0);
  add_triangle(plate, p0, p1, p2, {0, 0}, {1, 0}, {1, 1});
  add_triangle(plate, p0, p2, p3, {0, 0}, {1, 1}, {0, 1});
  plate.texture = solid_texture(srgb(0.35, 0.38, 0.45));
  plate.compute_normals();
  return plate;
}

OccluderMesh make_procedural_occluder(OccluderKind kind, const FaceModel& reference, std::string id) {
  OccluderMesh occ;
  occ.id = id.empty() ? std::string(to_string(kind)) : std::move(id);
  occ.kind = kind;
  occ.anchor_region = anchor_region_for(kind);

  // Head bounding box of the reference model.
  Vec3 lo = reference.mesh.vertices.front();
  Vec3 hi = lo;
  for (const Vec3& v : reference.mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 center = (lo + hi) / 2.0;
  const Vec3 half = (hi - lo) / 2.0;
  auto region_centroid = [&](Region r) {
    Vec3 sum = Vec3::Zero();
    int n = 0;
    for (const Landmark& l : reference.landmarks)
      if (l.region == r) {
        sum += l.position;
        ++n;
      }
    return n > 0 ? Vec3(sum / n) : reference.landmark_centroid();
  };

  TriangleMesh& m = occ.mesh;
  switch (kind) {
    case OccluderKind::sunglasses: {
      const double lens_x = 0.45 * half.x();
      add_box(m, Vec3(-lens_x, 0.0, 0.025), Vec3(0.026, 0.016, 0.003));
      add_box(m, Vec3(lens_x, 0.0, 0.025), Vec3(0.026, 0.016, 0.003));
      add_box(m, Vec3(0.0, 0.006, 0.025), Vec3(lens_x - 0.026, 0.003, 0.003));
      m.texture = solid_texture(srgb(0.04, 0.04, 0.05));
      break;
    }
    case OccluderKind::hat: {
      const double r = 1.12 * std::max(half.x(), half.z());
      const Vec3 top = center + Vec3(0.0, 1.15 * half.y(), 0.0) - region_centroid(Region::head);
      add_cylinder(m, top, r, 0.6 * half.y(), 24);
      add_cylinder(m, top - Vec3(0.0, 0.6 * half.y(), 0.0), 1.6 * r, 0.008, 24);
      m.texture = solid_texture(srgb(0.55, 0.15, 0.12));
      break;
    }
    case OccluderKind::helmet: {
      const Vec3 semi = 1.12 * half;
      const Vec3 offset = center - region_centroid(Region::head);
      add_grid_surface(
          m, 10, 32,
          [&](double t, double phi) {
            const double theta = t * kPi;
            return Vec3(offset.x() + semi.x() * std::sin(theta) * std::sin(phi),
                        offset.y() + semi.y() * std::cos(theta),
                        offset.z() + semi.z() * std::sin(theta) * std::cos(phi));
          },
          0.42);
      m.texture = solid_texture(srgb(0.85, 0.75, 0.15));
      break;
    }
    case OccluderKind::generic: {
      add_box(m, Vec3(0.0, 0.0, 0.035), Vec3(0.035, 0.025, 0.012));
      m.texture = solid_texture(srgb(0.20, 0.35, 0.65));
      break;
    }
  }
  validate_mesh(m, "occluder " + occ.id);
  m.compute_normals();
  return occ;
}

OccluderMesh load_occluder(const std::filesystem::path& mesh_path, OccluderKind kind, std::string id) {
  OccluderMesh occ;
  occ.id = id.empty() ? mesh_path.stem().string() : std::move(id);
  occ.kind = kind;
  occ.anchor_region = anchor_region_for(kind);
  occ.mesh = load_textured_mesh(mesh_path);
  validate_mesh(occ.mesh, "occluder " + occ.id);
  occ.mesh.compute_normals();
  return occ;
}

// ---------------------------------------------------------------------------
// Manifest.

AssetManifest builtin_manifest() {
  AssetManifest m;
  char buf[32];
  for (int i = 0; i < 100; ++i) {
    std::snprintf(buf, sizeof buf, "head-%03d", i);
    ModelEntry e;
    e.id = buf;
    e.procedural = std::make_pair(static_cast<std::uint64_t>(i), 6);
    m.models.push_back(e);
  }
  m.anchor = m.models.front().id;
  for (int i = 0; i < 50; ++i) {
    std::snprintf(buf, sizeof buf, "env-%02d", i);
    EnvironmentEntry e;
    e.id = buf;
    e.procedural_seed = static_cast<std::uint64_t>(i);
    m.environments.push_back(e);
  }
  for (OccluderKind k : {OccluderKind::sunglasses, OccluderKind::hat, OccluderKind::helmet, OccluderKind::generic}) {
    OccluderEntry e;
    e.id = std::string(to_string(k));
    e.kind = k;
    e.procedural = true;
    m.occluders.push_back(e);
  }
  return m;
}

AssetManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("asset manifest", 0, e.what());
  }
  if (!doc.is_object()) throw ParseError("asset manifest", 0, "top level must be an object");
  const AssetManifest builtin = builtin_manifest();
  AssetManifest m;
  auto require_string = [](const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string())
      throw ParseError("asset manifest", 0, where + ": missing string field '" + key + "'");
    return obj[key].get<std::string>();
  };
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  for (const auto& [key, value] : doc.items())
    if (key != "anchor" && key != "models" && key != "environments" && key != "occluders")
      throw ParseError("asset manifest", 0, "unknown key '" + key + "'");

  if (doc.contains("models")) {
    for (const auto& item : doc["models"]) {
      ModelEntry e;
      e.id = require_string(item, "id", "models");
      if (item.contains("procedural")) {
        const auto& p = item["procedural"];
        e.procedural = std::make_pair(p.value("seed", std::uint64_t{0}), p.value("detail", 6));
      } else {
        e.mesh = resolve(require_string(item, "mesh", "models/" + e.id));
        e.landmarks = resolve(require_string(item, "landmarks", "models/" + e.id));
      }
      m.models.push_back(std::move(e));
    }
  } else {
    m.models = builtin.models;
  }
  m.anchor = doc.contains("anchor") ? doc["anchor"].get<std::string>()
                                    : (m.models.empty() ? std::string() : m.models.front().id);

  if (doc.contains("environments")) {
    for (const auto& item : doc["environments"]) {
      EnvironmentEntry e;
      e.id = require_string(item, "id", "environments");
      e.indoor = item.value("indoor", false);
      if (item.contains("procedural")) e.procedural_seed = item["procedural"].value("seed", std::uint64_t{0});
      else e.path = resolve(require_string(item, "path", "environments/" + e.id));
      m.environments.push_back(std::move(e));
    }
  } else {
    m.environments = builtin.environments;
  }

  if (doc.contains("occluders")) {
    for (const auto& item : doc["occluders"]) {
      OccluderEntry e;
      e.id = require_string(item, "id", "occluders");
      const auto kind = parse_occluder_kind(require_string(item, "kind", "occluders/" + e.id));
      if (!kind) throw ParseError("asset manifest", 0, "occluders/" + e.id + ": unknown kind");
      e.kind = *kind;
      if (item.value("procedural", false)) e.procedural = true;
      else e.mesh = resolve(require_string(item, "mesh", "occluders/" + e.id));
      m.occluders.push_back(std::move(e));
    }
  } else {
    m.occluders = builtin.occluders;
  }
  return m;
}

AssetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open asset manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.parent_path());
}

std::vector<AssetCheck> validate_assets(const AssetManifest& manifest) {
  std::vector<AssetCheck> report;
  auto attempt = [&](const char* category, const std::string& id, auto&& load) {
    AssetCheck check{category, id, true, {}};
    try {
      load();
    } catch (const Error& e) {
      check.ok = false;
      check.reason = e.what();
    }
    report.push_back(std::move(check));
  };
  std::optional<FaceModel> reference;
  for (const auto& entry : manifest.models)
    attempt("model", entry.id, [&] {
      FaceModel model = load_model_entry(entry);
      if (entry.id == manifest.anchor || (!reference && manifest.anchor.empty())) reference = std::move(model);
    });
  for (const auto& entry : manifest.environments)
    attempt("environment", entry.id, [&] { load_environment_entry(entry); });
  for (const auto& entry : manifest.occluders)
    attempt("occluder", entry.id, [&] {
      if (entry.procedural && !reference) throw ValidationError("procedural occluder needs a valid anchor model");
      load_occluder_entry(entry, entry.procedural ? *reference : FaceModel{});
    });
  return report;
}

// ---------------------------------------------------------------------------
// Library.

AssetLibrary::AssetLibrary(std::vector<FaceModel> models, const std::string& anchor_id,
                           std::vector<Environment> environments, std::vector<OccluderMesh> occluders)
    : models_(std::move(models)),
      environments_(std::move(environments)),
      occluders_(std::move(occluders)),
      plate_(make_plate_mesh()),
      anchor_id_(anchor_id) {
  model_ids_ = index_ids(models_, "model");
  environment_ids_ = index_ids(environments_, "environment");
  occluder_ids_ = index_ids(occluders_, "occluder");
  for (const auto& m : models_) validate_face_model(m);
  for (const auto& e : environments_) validate_environment(e);
  for (const auto& o : occluders_) validate_mesh(o.mesh, "occluder " + o.id);

  FaceModel& anchor = models_[lookup(model_ids_, anchor_id_, "model")];
  RigidTransform center;
  center.translation = -anchor.landmark_centroid();
  anchor = transform_model(anchor, center);
  const auto anchor_points = anchor.landmark_positions();
  for (FaceModel& m : models_) {
    if (&m == &anchor) continue;
    m = transform_model(m, align_to_anchor(m.landmark_positions(), anchor_points));
  }
  for (FaceModel& m : models_) m.mesh.compute_normals();
  for (OccluderMesh& o : occluders_)
    if (o.mesh.normals.size() != o.mesh.vertices.size()) o.mesh.compute_normals();
}

const FaceModel& AssetLibrary::model(std::string_view id) const { return models_[model_index(id)]; }
const Environment& AssetLibrary::environment(std::string_view id) const {
  return environments_[environment_index(id)];
}
const OccluderMesh& AssetLibrary::occluder(std::string_view id) const { return occluders_[occluder_index(id)]; }

std::size_t AssetLibrary::model_index(std::string_view id) const { return lookup(model_ids_, id, "model"); }
std::size_t AssetLibrary::environment_index(std::string_view id) const {
  return lookup(environment_ids_, id, "environment");
}
std::size_t AssetLibrary::occluder_index(std::string_view id) const { return lookup(occluder_ids_, id, "occluder"); }

AssetLibrary load_assets(const AssetManifest& manifest) {
  std::vector<FaceModel> models;
  for (const auto& entry : manifest.models) models.push_back(load_model_entry(entry));
  const ModelEntry& anchor = anchor_entry(manifest);
  const FaceModel* reference = nullptr;
  for (const auto& m : models)
    if (m.id == anchor.id) reference = &m;

  std::vector<Environment> environments;
  for (const auto& entry : manifest.environments) environments.push_back(load_environment_entry(entry));
  std::vector<OccluderMesh> occluders;
  for (const auto& entry : manifest.occluders) occluders.push_back(load_occluder_entry(entry, *reference));
  return AssetLibrary(std::move(models), anchor.id, std::move(environments), std::move(occluders));
}

}  // namespace facegen
