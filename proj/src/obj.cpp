#include "facegen/obj.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "facegen/errors.hpp"

namespace facegen {

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

double to_double(std::string_view token, const std::string& source, int line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError(source, line, "bad number '" + std::string(token) + "'");
  return value;
}

long to_long(std::string_view token, const std::string& source, int line) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError(source, line, "bad index '" + std::string(token) + "'");
  return value;
}

// Resolves a 1-based (or negative, relative) OBJ index against `count`.
std::uint32_t resolve_index(long raw, std::size_t count, const char* what, const std::string& source, int line) {
  long resolved = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
  if (raw == 0 || resolved < 0 || resolved >= static_cast<long>(count))
    throw ParseError(source, line,
                     std::string(what) + " index " + std::to_string(raw) + " exceeds " + what + " count " +
                         std::to_string(count));
  return static_cast<std::uint32_t>(resolved);
}

struct Corner {
  std::uint32_t position;
  long uv;  // -1 when absent
};

}  // namespace

ObjMesh parse_obj(std::istream& in, const std::string& source) {
  ObjMesh mesh;
  std::vector<Vec2> texcoords;
  std::vector<std::array<Corner, 3>> faces;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto tokens = tokenize(strip_comment(raw));
    if (tokens.empty()) continue;
    const std::string_view key = tokens[0];
    if (key == "v") {
      if (tokens.size() < 4) throw ParseError(source, line_no, "vertex needs 3 coordinates");
      mesh.positions.emplace_back(to_double(tokens[1], source, line_no), to_double(tokens[2], source, line_no),
                                  to_double(tokens[3], source, line_no));
    } else if (key == "vt") {
      if (tokens.size() < 3) throw ParseError(source, line_no, "texture coordinate needs 2 components");
      texcoords.emplace_back(to_double(tokens[1], source, line_no), to_double(tokens[2], source, line_no));
    } else if (key == "f") {
      if (tokens.size() != 4)
        throw ParseError(source, line_no, "face has " + std::to_string(tokens.size() - 1) + " vertices, expected 3");
      std::array<Corner, 3> face{};
      for (int k = 0; k < 3; ++k) {
        const std::string_view corner = tokens[k + 1];
        const auto slash = corner.find('/');
        face[k].position =
            resolve_index(to_long(corner.substr(0, slash), source, line_no), mesh.positions.size(), "vertex", source, line_no);
        face[k].uv = -1;
        if (slash != std::string_view::npos) {
          const std::string_view rest = corner.substr(slash + 1);
          const std::string_view vt = rest.substr(0, rest.find('/'));
          if (!vt.empty())
            face[k].uv = resolve_index(to_long(vt, source, line_no), texcoords.size(), "texcoord", source, line_no);
        }
      }
      faces.push_back(face);
    } else if (key == "mtllib") {
      for (std::size_t i = 1; i < tokens.size(); ++i) mesh.material_libraries.emplace_back(tokens[i]);
    } else if (key == "usemtl") {
      if (tokens.size() < 2) throw ParseError(source, line_no, "usemtl needs a name");
      mesh.materials_used.emplace_back(tokens[1]);
    }
    // vn, o, g, s and unknown statements carry nothing the loader needs.
  }

  bool shared_indices = true;
  for (const auto& face : faces)
    for (const Corner& c : face)
      if (c.uv >= 0 && c.uv != static_cast<long>(c.position)) shared_indices = false;

  if (shared_indices) {
    mesh.uv.assign(mesh.positions.size(), Vec2::Zero());
    for (const auto& face : faces) {
      Triangle t{};
      for (int k = 0; k < 3; ++k) {
        t[k] = face[k].position;
        if (face[k].uv >= 0) mesh.uv[t[k]] = texcoords[face[k].uv];
      }
      mesh.triangles.push_back(t);
    }
    return mesh;
  }

  // Split vertices so each (position, texcoord) pair gets its own index.
  std::map<std::pair<std::uint32_t, long>, std::uint32_t> remap;
  std::vector<Vec3> positions;
  for (const auto& face : faces) {
    Triangle t{};
    for (int k = 0; k < 3; ++k) {
      const auto key = std::make_pair(face[k].position, face[k].uv);
      auto [it, inserted] = remap.try_emplace(key, static_cast<std::uint32_t>(positions.size()));
      if (inserted) {
        positions.push_back(mesh.positions[face[k].position]);
        mesh.uv.push_back(face[k].uv >= 0 ? texcoords[face[k].uv] : Vec2::Zero());
      }
      t[k] = it->second;
    }
    mesh.triangles.push_back(t);
  }
  mesh.positions = std::move(positions);
  return mesh;
}

ObjMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_obj(in, path.string());
}

std::vector<std::filesystem::path> parse_mtl_textures(std::istream& in, const std::string& source,
                                                      const std::filesystem::path& base_dir) {
  std::vector<std::filesystem::path> textures;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto tokens = tokenize(strip_comment(raw));
    if (tokens.empty() || tokens[0] != "map_Kd") continue;
    if (tokens.size() < 2) throw ParseError(source, line_no, "map_Kd needs a file name");
    // Options (-s, -o, ...) precede the file name, which is the last token.
    const auto path = base_dir / std::filesystem::path(std::string(tokens.back()));
    if (std::find(textures.begin(), textures.end(), path) == textures.end()) textures.push_back(path);
  }
  return textures;
}

TriangleMesh load_textured_mesh(const std::filesystem::path& obj_path) {
  ObjMesh obj = read_obj(obj_path);
  const auto base_dir = obj_path.parent_path();
  std::vector<std::filesystem::path> textures;
  for (const auto& lib : obj.material_libraries) {
    const auto mtl_path = base_dir / lib;
    std::ifstream in(mtl_path);
    if (!in) throw IoError("cannot open material library " + mtl_path.string());
    for (auto& t : parse_mtl_textures(in, mtl_path.string(), mtl_path.parent_path()))
      if (std::find(textures.begin(), textures.end(), t) == textures.end()) textures.push_back(std::move(t));
  }
  if (textures.size() > 1)
    throw ValidationError(obj_path.string() + ": mesh references " + std::to_string(textures.size()) +
                          " textures, expected a single atlas");

  TriangleMesh mesh;
  mesh.vertices = std::move(obj.positions);
  mesh.uv = std::move(obj.uv);
  mesh.triangles = std::move(obj.triangles);
  if (textures.empty()) {
    mesh.texture = RgbImage(1, 1, Rgb{0.6f, 0.6f, 0.6f});
  } else {
    const Rgb8Image srgb = read_png(textures.front());
    mesh.texture = RgbImage(srgb.width(), srgb.height());
    for (int y = 0; y < srgb.height(); ++y)
      for (int x = 0; x < srgb.width(); ++x) {
        const Rgb8 p = srgb(x, y);
        mesh.texture(x, y) = {srgb8_to_linear(p.r), srgb8_to_linear(p.g), srgb8_to_linear(p.b)};
      }
  }
  return mesh;
}

std::filesystem::path write_textured_mesh(const TriangleMesh& mesh, const std::filesystem::path& dir,
                                          const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto obj_path = dir / (stem + ".obj");
  {
    std::ofstream mtl(dir / (stem + ".mtl"));
    if (!mtl) throw IoError("cannot write " + (dir / (stem + ".mtl")).string());
    mtl << "newmtl surface\nKd 1 1 1\nmap_Kd " << stem << ".png\n";
  }
  Rgb8Image srgb(mesh.texture.width(), mesh.texture.height());
  for (int y = 0; y < srgb.height(); ++y)
    for (int x = 0; x < srgb.width(); ++x) {
      const Rgb c = mesh.texture(x, y);
      srgb(x, y) = {linear_to_srgb8(c.r), linear_to_srgb8(c.g), linear_to_srgb8(c.b)};
    }
  write_png(dir / (stem + ".png"), srgb);

  std::ofstream out(obj_path);
  if (!out) throw IoError("cannot write " + obj_path.string());
  out.precision(17);
  out << "mtllib " << stem << ".mtl\nusemtl surface\n";
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec2 uv = i < mesh.uv.size() ? mesh.uv[i] : Vec2::Zero();
    out << "vt " << uv.x() << ' ' << uv.y() << '\n';
  }
  for (const Triangle& t : mesh.triangles)
    out << "f " << t[0] + 1 << '/' << t[0] + 1 << ' ' << t[1] + 1 << '/' << t[1] + 1 << ' ' << t[2] + 1 << '/'
        << t[2] + 1 << '\n';
  if (!out) throw IoError("write failed for " + obj_path.string());
  return obj_path;
}

}  // namespace facegen
