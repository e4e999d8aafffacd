#include "facegen/annotate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "facegen/errors.hpp"

namespace facegen {

namespace {

using ordered_json = nlohmann::ordered_json;

int occlusion_flag(OcclusionLevel level) { return static_cast<int>(level); }

ordered_json number(double v) {
  if (v == std::floor(v) && std::abs(v) < 9e15) return static_cast<long long>(v);
  return v;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double parse_double(const std::string& token, const std::string& source, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(source, line, "bad number '" + token + "'");
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::optional<Box> landmarks_to_box(std::span<const Projection> landmarks, int image_width, int image_height,
                                    double expand_top) {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int visible = 0;
  for (const Projection& p : landmarks) {
    if (p.behind_camera) continue;
    if (visible == 0) {
      x0 = x1 = p.x;
      y0 = y1 = p.y;
    } else {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    ++visible;
  }
  if (visible < 3) return std::nullopt;
  const double top = y0 - expand_top * (y1 - y0);
  const double left = std::clamp(std::floor(x0), 0.0, static_cast<double>(image_width));
  const double right = std::clamp(std::ceil(x1), 0.0, static_cast<double>(image_width));
  const double upper = std::clamp(std::floor(top), 0.0, static_cast<double>(image_height));
  const double lower = std::clamp(std::ceil(y1), 0.0, static_cast<double>(image_height));
  return Box{left, upper, std::max(0.0, right - left), std::max(0.0, lower - upper)};
}

std::string_view to_string(ScaleBin bin) {
  switch (bin) {
    case ScaleBin::tiny: return "tiny";
    case ScaleBin::medium: return "medium";
    case ScaleBin::large: return "large";
  }
  return "tiny";
}

std::optional<ScaleBin> parse_scale_bin(std::string_view text) {
  if (text == "tiny") return ScaleBin::tiny;
  if (text == "medium") return ScaleBin::medium;
  if (text == "large") return ScaleBin::large;
  return std::nullopt;
}

ScaleBinning scale_bin(double height) {
  ScaleBinning out;
  out.out_of_range = height < 10.0 || height > 400.0;
  if (height < 30.0) out.bin = ScaleBin::tiny;
  else if (height < 50.0) out.bin = ScaleBin::medium;
  else out.bin = ScaleBin::large;
  return out;
}

BinRange nominal_range(ScaleBin bin) {
  switch (bin) {
    case ScaleBin::tiny: return {10, 30, 8, 20};
    case ScaleBin::medium: return {30, 50, 10, 70};
    case ScaleBin::large: return {50, 400, 20, 300};
  }
  return {};
}

std::string_view to_string(OcclusionLevel level) {
  switch (level) {
    case OcclusionLevel::none: return "none";
    case OcclusionLevel::landmark: return "landmark";
    case OcclusionLevel::heavy: return "heavy";
  }
  return "none";
}

std::optional<OcclusionLevel> parse_occlusion_level(std::string_view text) {
  if (text == "none") return OcclusionLevel::none;
  if (text == "landmark") return OcclusionLevel::landmark;
  if (text == "heavy") return OcclusionLevel::heavy;
  return std::nullopt;
}

std::optional<double> visibility_fraction(std::size_t owned_pixels, std::size_t silhouette_pixels) {
  if (silhouette_pixels == 0) return std::nullopt;
  return std::min(1.0, static_cast<double>(owned_pixels) / static_cast<double>(silhouette_pixels));
}

OcclusionLevel occlusion_level(double visibility, bool has_occluders) {
  if (visibility < 0.5) return OcclusionLevel::heavy;
  return has_occluders ? OcclusionLevel::landmark : OcclusionLevel::none;
}

DatasetStats dataset_stats(std::span<const AnnotatedImage> images) {
  DatasetStats stats;
  std::array<std::vector<double>, 3> heights, widths;
  for (const AnnotatedImage& image : images) {
    for (const FaceAnnotation& face : image.faces) {
      ++stats.total;
      if (face.ignored) {
        ++stats.ignored;
        continue;
      }
      const auto b = static_cast<std::size_t>(scale_bin(face.box.h).bin);
      heights[b].push_back(face.box.h);
      widths[b].push_back(face.box.w);
    }
  }
  if (stats.total == stats.ignored) throw EmptyDatasetError("no annotated faces to summarize");
  for (std::size_t b = 0; b < 3; ++b) {
    BinStats& s = stats.bins[b];
    s.count = heights[b].size();
    if (s.count == 0) continue;
    const BinRange r = nominal_range(static_cast<ScaleBin>(b));
    const auto [hmin, hmax] = std::minmax_element(heights[b].begin(), heights[b].end());
    const auto [wmin, wmax] = std::minmax_element(widths[b].begin(), widths[b].end());
    s.min_h = *hmin;
    s.max_h = *hmax;
    s.min_w = *wmin;
    s.max_w = *wmax;
    s.median_h = median(heights[b]);
    s.median_w = median(widths[b]);
    std::size_t h_in = 0, w_in = 0;
    for (std::size_t i = 0; i < s.count; ++i) {
      const ScaleBinning sb = scale_bin(heights[b][i]);
      if (!sb.out_of_range) ++h_in;
      if (widths[b][i] >= r.min_w && widths[b][i] <= r.max_w) ++w_in;
    }
    s.frac_height_in_range = static_cast<double>(h_in) / s.count;
    s.frac_width_in_range = static_cast<double>(w_in) / s.count;
  }
  return stats;
}

void write_stats_csv(std::ostream& out, const DatasetStats& stats) {
  out << "bin,count,min_h,max_h,frac_in_range\n";
  for (std::size_t b = 0; b < 3; ++b) {
    const BinStats& s = stats.bins[b];
    out << to_string(static_cast<ScaleBin>(b)) << ',' << s.count << ',';
    if (s.count > 0) out << s.min_h << ',' << s.max_h << ',' << s.frac_height_in_range;
    else out << ",,";
    out << '\n';
  }
}

void write_wider(std::ostream& out, std::span<const AnnotatedImage> images) {
  for (const AnnotatedImage& image : images) {
    out << image.path << '\n' << image.faces.size() << '\n';
    for (const FaceAnnotation& f : image.faces)
      out << f.box.x << ' ' << f.box.y << ' ' << f.box.w << ' ' << f.box.h << ' ' << occlusion_flag(f.occlusion) << ' '
          << (f.ignored ? 1 : 0) << '\n';
  }
}

std::vector<AnnotatedImage> parse_wider(std::istream& in, const std::string& source) {
  std::vector<AnnotatedImage> images;
  std::string line;
  int line_no = 0;
  auto next = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++line_no;
      out = trim(line);
      if (!out.empty()) return true;
    }
    return false;
  };
  std::string text;
  while (next(text)) {
    AnnotatedImage image;
    image.image_id = images.size();
    image.path = text;
    if (!next(text)) throw ParseError(source, line_no, "missing face count after '" + image.path + "'");
    const double count = parse_double(text, source, line_no);
    if (count < 0 || count != std::floor(count)) throw ParseError(source, line_no, "bad face count '" + text + "'");
    for (int i = 0; i < static_cast<int>(count); ++i) {
      if (!next(text)) throw ParseError(source, line_no, "expected " + std::to_string(static_cast<int>(count)) +
                                                             " faces for '" + image.path + "'");
      const auto tokens = split_ws(text);
      if (tokens.size() < 4) throw ParseError(source, line_no, "face line needs at least x y w h");
      FaceAnnotation face;
      face.image_id = image.image_id;
      face.box = {parse_double(tokens[0], source, line_no), parse_double(tokens[1], source, line_no),
                  parse_double(tokens[2], source, line_no), parse_double(tokens[3], source, line_no)};
      if (tokens.size() >= 5) {
        const double flag = parse_double(tokens[4], source, line_no);
        if (flag != 0 && flag != 1 && flag != 2) throw ParseError(source, line_no, "occlusion flag must be 0, 1 or 2");
        face.occlusion = static_cast<OcclusionLevel>(static_cast<int>(flag));
      }
      if (tokens.size() >= 6) {
        const double flag = parse_double(tokens[5], source, line_no);
        if (flag != 0 && flag != 1) throw ParseError(source, line_no, "ignored flag must be 0 or 1");
        face.ignored = flag == 1;
      }
      const ScaleBinning sb = scale_bin(face.box.h);
      face.scale_bin = sb.bin;
      face.scale_out_of_range = sb.out_of_range;
      image.faces.push_back(face);
    }
    images.push_back(std::move(image));
  }
  return images;
}

std::string coco_json(std::span<const AnnotatedImage> images) {
  ordered_json doc;
  doc["info"] = {{"description", "facegen synthetic faces"}};
  ordered_json image_list = ordered_json::array();
  ordered_json annotation_list = ordered_json::array();
  std::size_t next_id = 1;
  for (const AnnotatedImage& image : images) {
    image_list.push_back({{"id", image.image_id},
                          {"file_name", image.path},
                          {"width", image.width},
                          {"height", image.height}});
    for (const FaceAnnotation& f : image.faces) {
      annotation_list.push_back({{"id", next_id++},
                                 {"image_id", image.image_id},
                                 {"category_id", 1},
                                 {"bbox", {number(f.box.x), number(f.box.y), number(f.box.w), number(f.box.h)}},
                                 {"area", number(f.box.area())},
                                 {"iscrowd", 0},
                                 {"ignore", f.ignored ? 1 : 0},
                                 {"occlusion", std::string(to_string(f.occlusion))},
                                 {"visibility", f.visibility},
                                 {"scale_bin", std::string(to_string(f.scale_bin))},
                                 {"scale_out_of_range", f.scale_out_of_range},
                                 {"pose", {{"pitch", f.pose.pitch}, {"yaw", f.pose.yaw}, {"roll", f.pose.roll}}}});
    }
  }
  doc["images"] = std::move(image_list);
  doc["annotations"] = std::move(annotation_list);
  doc["categories"] = ordered_json::array({{{"id", 1}, {"name", "face"}}});
  return doc.dump(1) + "\n";
}

std::vector<AnnotatedImage> parse_coco(std::string_view text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, std::string("invalid JSON: ") + e.what());
  }
  try {
    std::vector<AnnotatedImage> images;
    std::map<std::uint64_t, std::size_t> by_id;
    for (const auto& img : doc.at("images")) {
      AnnotatedImage image;
      image.image_id = img.at("id").get<std::uint64_t>();
      image.path = img.at("file_name").get<std::string>();
      image.width = img.value("width", 0);
      image.height = img.value("height", 0);
      if (!by_id.emplace(image.image_id, images.size()).second)
        throw ParseError(source, 0, "duplicate image id " + std::to_string(image.image_id));
      images.push_back(std::move(image));
    }
    for (const auto& a : doc.at("annotations")) {
      const auto image_id = a.at("image_id").get<std::uint64_t>();
      const auto it = by_id.find(image_id);
      if (it == by_id.end()) throw ParseError(source, 0, "annotation refers to unknown image " + std::to_string(image_id));
      const auto& bbox = a.at("bbox");
      if (!bbox.is_array() || bbox.size() != 4) throw ParseError(source, 0, "bbox must have four numbers");
      FaceAnnotation face;
      face.image_id = image_id;
      face.box = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(), bbox[3].get<double>()};
      face.ignored = a.value("ignore", 0) != 0 || a.value("iscrowd", 0) != 0;
      if (a.contains("occlusion")) {
        const auto level = parse_occlusion_level(a["occlusion"].get<std::string>());
        if (!level) throw ParseError(source, 0, "unknown occlusion level");
        face.occlusion = *level;
      }
      face.visibility = a.value("visibility", 1.0);
      const ScaleBinning sb = scale_bin(face.box.h);
      face.scale_bin = sb.bin;
      face.scale_out_of_range = sb.out_of_range;
      if (a.contains("pose")) {
        const auto& p = a["pose"];
        face.pose = {p.value("pitch", 0.0), p.value("yaw", 0.0), p.value("roll", 0.0)};
      }
      images[it->second].faces.push_back(face);
    }
    return images;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, std::string("malformed COCO document: ") + e.what());
  }
}

void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedImage> images,
                       AnnotationFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == AnnotationFormat::coco_json) out << coco_json(images);
  else write_wider(out, images);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<AnnotatedImage> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (path.extension() == ".json") {
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_coco(buffer.str(), path.string());
  }
  return parse_wider(in, path.string());
}

}  // namespace facegen
