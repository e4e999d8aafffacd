#pragma once

// Wavefront OBJ/MTL reading and writing for triangulated, single-texture meshes.

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "facegen/model.hpp"

namespace facegen {

struct ObjMesh {
  std::vector<Vec3> positions;
  std::vector<Vec2> uv;  // per position; zero when the file has no texture coordinates
  std::vector<Triangle> triangles;
  std::vector<std::string> material_libraries;
  std::vector<std::string> materials_used;
};

// `source` names the stream in error messages.
ObjMesh parse_obj(std::istream& in, const std::string& source);
ObjMesh read_obj(const std::filesystem::path& path);

// Returns every distinct map_Kd path in the library, in file order, resolved
// against `base_dir`.
std::vector<std::filesystem::path> parse_mtl_textures(std::istream& in, const std::string& source,
                                                      const std::filesystem::path& base_dir);

// Loads an OBJ plus its material texture into a mesh. Meshes referencing more
// than one texture are rejected. Without a texture the albedo is uniform gray.
TriangleMesh load_textured_mesh(const std::filesystem::path& obj_path);

// Writes <stem>.obj, <stem>.mtl and <stem>.png into `dir`; returns the OBJ path.
std::filesystem::path write_textured_mesh(const TriangleMesh& mesh, const std::filesystem::path& dir,
                                          const std::string& stem);

}  // namespace facegen
