#pragma once

// Asset ingestion: face models, HDR environments, occluders, and the
// procedural stand-ins used when no scanned assets are supplied.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facegen/model.hpp"

namespace facegen {

// Landmark text format: a `count 50` header line followed by 50 lines of
// `index x y z region`. Blank lines and `#` comments are skipped.
LandmarkSet parse_landmarks(std::istream& in, const std::string& source);
LandmarkSet read_landmarks(const std::filesystem::path& path);
void write_landmarks(std::ostream& out, const LandmarkSet& landmarks);

// Throws ValidationError describing the first violated invariant.
void validate_face_model(const FaceModel& model);
void validate_mesh(const TriangleMesh& mesh, const std::string& what);
void validate_environment(const Environment& env);

FaceModel load_face_model(const std::filesystem::path& mesh_path, const std::filesystem::path& landmark_path,
                          std::string id = {});
// Writes <stem>.obj/.mtl/.png/.lmk into `dir`.
void write_face_model(const FaceModel& model, const std::filesystem::path& dir, const std::string& stem);

Environment load_environment(const std::filesystem::path& hdr_path, std::string id = {}, bool is_indoor = false);

// Ellipsoidal head with semi-axes 0.10 x 0.14 x 0.12 m facing +Z, 4*detail
// stacks by 8*detail slices, and 50 landmarks: 20 outline, 12 eye, 10 mouth,
// 8 head. Deterministic in (seed, detail).
FaceModel make_test_head(std::uint64_t seed, int detail);

// Outdoor sky/ground or indoor room panorama, 2:1, deterministic in seed.
Environment make_procedural_environment(std::uint64_t seed, int width = 256);

// Occluder built around `reference` (usually the anchor head) and expressed
// relative to the centroid of its anchor region.
OccluderMesh make_procedural_occluder(OccluderKind kind, const FaceModel& reference, std::string id = {});
OccluderMesh load_occluder(const std::filesystem::path& mesh_path, OccluderKind kind, std::string id = {});

// Unit square in the XY plane facing +Z, used for heavy occlusion.
TriangleMesh make_plate_mesh();

struct ModelEntry {
  std::string id;
  std::filesystem::path mesh;
  std::filesystem::path landmarks;
  std::optional<std::pair<std::uint64_t, int>> procedural;  // (seed, detail)
};

struct EnvironmentEntry {
  std::string id;
  std::filesystem::path path;
  bool indoor = false;
  std::optional<std::uint64_t> procedural_seed;
};

struct OccluderEntry {
  std::string id;
  OccluderKind kind = OccluderKind::generic;
  std::filesystem::path mesh;
  bool procedural = false;
};

// Asset manifest (JSON). Relative paths resolve against the manifest's
// directory. A missing section falls back to the built-in procedural set.
struct AssetManifest {
  std::string anchor;
  std::vector<ModelEntry> models;
  std::vector<EnvironmentEntry> environments;
  std::vector<OccluderEntry> occluders;
};

AssetManifest builtin_manifest();
AssetManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
AssetManifest read_manifest(const std::filesystem::path& path);

struct AssetCheck {
  std::string category;  // model, environment, occluder
  std::string id;
  bool ok = true;
  std::string reason;
};

// Loads every asset independently and reports per-asset outcomes.
std::vector<AssetCheck> validate_assets(const AssetManifest& manifest);

// Validated, immutable asset set. Models are similarity-aligned to the anchor
// model, whose landmark centroid sits at the origin.
class AssetLibrary {
 public:
  AssetLibrary(std::vector<FaceModel> models, const std::string& anchor_id, std::vector<Environment> environments,
               std::vector<OccluderMesh> occluders);

  const std::vector<FaceModel>& models() const { return models_; }
  const std::vector<Environment>& environments() const { return environments_; }
  const std::vector<OccluderMesh>& occluders() const { return occluders_; }
  const std::string& anchor_id() const { return anchor_id_; }

  const FaceModel& model(std::string_view id) const;
  const Environment& environment(std::string_view id) const;
  const OccluderMesh& occluder(std::string_view id) const;
  const TriangleMesh& heavy_plate() const { return plate_; }

  std::size_t model_index(std::string_view id) const;
  std::size_t environment_index(std::string_view id) const;
  std::size_t occluder_index(std::string_view id) const;

 private:
  std::vector<FaceModel> models_;
  std::vector<Environment> environments_;
  std::vector<OccluderMesh> occluders_;
  TriangleMesh plate_;
  std::string anchor_id_;
  std::map<std::string, std::size_t, std::less<>> model_ids_;
  std::map<std::string, std::size_t, std::less<>> environment_ids_;
  std::map<std::string, std::size_t, std::less<>> occluder_ids_;
};

// Throws ValidationError, IoError or ParseError on the first bad asset.
AssetLibrary load_assets(const AssetManifest& manifest);

}  // namespace facegen
