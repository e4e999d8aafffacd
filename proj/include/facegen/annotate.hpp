#pragma once

// Ground-truth face boxes, visibility and occlusion levels, scale statistics,
// and the WIDER-style text and COCO JSON annotation formats.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facegen/box.hpp"
#include "facegen/geometry.hpp"

namespace facegen {

// Axis-aligned hull of the in-front landmarks, top edge raised by
// expand_top * hull height, clipped to the image and rounded outward.
// nullopt when fewer than three landmarks are in front of the camera.
std::optional<Box> landmarks_to_box(std::span<const Projection> landmarks, int image_width, int image_height,
                                    double expand_top = 0.1);

enum class ScaleBin { tiny, medium, large };

std::string_view to_string(ScaleBin bin);
std::optional<ScaleBin> parse_scale_bin(std::string_view text);

struct ScaleBinning {
  ScaleBin bin = ScaleBin::tiny;
  bool out_of_range = false;  // height outside [10, 400]
};

// By height: [10,30) tiny, [30,50) medium, [50,400] large; boundaries go to
// the larger bin and heights outside [10,400] land in the nearest bin.
ScaleBinning scale_bin(double height);

// Nominal height and width ranges per bin (face-scale table of the
// WIDER FACE validation set).
struct BinRange {
  double min_h, max_h, min_w, max_w;
};
BinRange nominal_range(ScaleBin bin);

enum class OcclusionLevel { none, landmark, heavy };

std::string_view to_string(OcclusionLevel level);
std::optional<OcclusionLevel> parse_occlusion_level(std::string_view text);

// Composite-owned pixels over solo-silhouette pixels; nullopt for an empty
// silhouette.
std::optional<double> visibility_fraction(std::size_t owned_pixels, std::size_t silhouette_pixels);
OcclusionLevel occlusion_level(double visibility, bool has_occluders);

struct FaceAnnotation {
  std::uint64_t image_id = 0;
  Box box;
  OcclusionLevel occlusion = OcclusionLevel::none;
  double visibility = 1.0;
  ScaleBin scale_bin = ScaleBin::tiny;
  bool scale_out_of_range = false;
  Pose pose;
  bool ignored = false;
};

struct AnnotatedImage {
  std::uint64_t image_id = 0;
  std::string path;  // relative to the dataset root
  int width = 0;
  int height = 0;
  std::vector<FaceAnnotation> faces;
};

struct BinStats {
  std::size_t count = 0;
  double min_h = 0.0, max_h = 0.0, median_h = 0.0;
  double min_w = 0.0, max_w = 0.0, median_w = 0.0;
  double frac_height_in_range = 0.0;
  double frac_width_in_range = 0.0;
};

struct DatasetStats {
  std::size_t total = 0;
  std::size_t ignored = 0;  // excluded from the bins
  std::array<BinStats, 3> bins;  // indexed by ScaleBin
};

// Bins every non-ignored face. Throws EmptyDatasetError when there is none.
DatasetStats dataset_stats(std::span<const AnnotatedImage> images);
// CSV columns: bin,count,min_h,max_h,frac_in_range (height fraction).
void write_stats_csv(std::ostream& out, const DatasetStats& stats);

// Per image: path line, count line, then `x y w h occlusion_flag ignored_flag`
// per face, with occlusion_flag 0 none, 1 landmark, 2 heavy.
void write_wider(std::ostream& out, std::span<const AnnotatedImage> images);
std::vector<AnnotatedImage> parse_wider(std::istream& in, const std::string& source);

std::string coco_json(std::span<const AnnotatedImage> images);
std::vector<AnnotatedImage> parse_coco(std::string_view text, const std::string& source);

enum class AnnotationFormat { wider_txt, coco_json };

// Throws IoError.
void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedImage> images,
                       AnnotationFormat format);
// Format chosen by extension: .json is COCO, anything else WIDER text.
std::vector<AnnotatedImage> read_annotations(const std::filesystem::path& path);

}  // namespace facegen
