#include "facegen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "facegen/errors.hpp"

namespace facegen {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

bool is_dataset_image(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() == 10 && p.extension() == ".png" &&
         std::all_of(name.begin(), name.begin() + 6, [](char c) { return c >= '0' && c <= '9'; });
}

void put_pixel(Rgb8Image& image, int x, int y, Rgb8 color) {
  if (x >= 0 && y >= 0 && x < image.width() && y < image.height()) image(x, y) = color;
}

}  // namespace

AssetManifest resolve_manifest(const std::string& path) {
  if (!path.empty()) return read_manifest(path);
  if (const char* env = std::getenv("FACEGEN_ASSETS"); env && *env) return read_manifest(env);
  return builtin_manifest();
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<const AssetLibrary> assets)
    : config_(std::move(config)), assets_(std::move(assets)), renderer_(*assets_, config_.render) {
  validate(config_);
  resolve_pools(config_.generation, *assets_);
}

Camera Pipeline::target_camera() const {
  Camera camera;
  camera.vertical_fov = config_.render.vertical_fov;
  camera.image_width = config_.render.target_width;
  camera.image_height = config_.render.target_height;
  return camera;
}

SceneSpec Pipeline::scene(std::uint64_t index) const {
  return sample_scene(config_.generation, index, *assets_, target_camera(), config_.annotation.expand_top);
}

AnnotatedImage Pipeline::annotate(const SceneSpec& scene, const Image<std::uint16_t>& instance_ids,
                                  std::vector<std::vector<Projection>>* landmarks) const {
  const Camera& camera = scene.camera;
  AnnotatedImage out;
  out.image_id = scene.image_id;
  out.path = image_path(scene.image_id);
  out.width = camera.image_width;
  out.height = camera.image_height;

  std::vector<std::size_t> owned(scene.faces.size() + 1, 0);
  for (std::uint16_t id : instance_ids.pixels())
    if (id != kNoInstance && !(id & kOccluderInstanceBit) && id <= scene.faces.size()) ++owned[id];

  const MinFacePx& min_px = config_.generation.min_face_px;
  for (std::size_t k = 0; k < scene.faces.size(); ++k) {
    const FaceInstance& face = scene.faces[k];
    const FaceModel& model = assets_->model(face.model_id);
    const RigidTransform t = face_transform(face, model, camera);
    std::vector<Projection> points(kLandmarkCount);
    for (int i = 0; i < kLandmarkCount; ++i) points[i] = project(camera, t.apply(model.landmarks[i].position));

    FaceAnnotation a;
    a.image_id = scene.image_id;
    a.pose = face.pose;
    const std::optional<Box> box = landmarks_to_box(points, camera.image_width, camera.image_height,
                                                    config_.annotation.expand_top);
    if (box) a.box = *box;
    const DrawItem item{&model.mesh, t, face_instance_id(k), nullptr};
    const std::optional<double> vis =
        visibility_fraction(owned[k + 1], silhouette_pixels(item, camera, config_.render.cull_backfaces));
    a.visibility = vis.value_or(0.0);
    a.occlusion = occlusion_level(a.visibility, !face.occluders.empty());
    const ScaleBinning sb = scale_bin(a.box.h);
    a.scale_bin = sb.bin;
    a.scale_out_of_range = sb.out_of_range;
    a.ignored = !box || !vis || owned[k + 1] == 0 || !(a.box.w > min_px.width && a.box.h > min_px.height) ||
                (config_.annotation.mafa_ignore && std::min(a.box.w, a.box.h) < 32.0);
    out.faces.push_back(a);
    if (landmarks) landmarks->push_back(std::move(points));
  }
  return out;
}

ProducedImage Pipeline::produce(std::uint64_t index, bool keep_buffers) const {
  ProducedImage out;
  out.scene = scene(index);
  const Camera target = out.scene.camera;
  out.base_width = choose_base_width(config_.render, config_.generation.seed, index);
  out.base_height = out.base_width * 3 / 4;
  const Camera base = target.with_resolution(out.base_width, out.base_height);

  const std::vector<DrawItem> items = build_draw_list(out.scene, *assets_);
  Framebuffer fb = renderer_.render(items, base, out.scene.environment_id);
  const bool same_size = base.image_width == target.image_width && base.image_height == target.image_height;
  out.image = tonemap(same_size ? fb.color : resample(fb.color, target.image_width, target.image_height),
                      config_.render.exposure);
  Framebuffer ids;
  if (same_size) {
    ids.depth = std::move(fb.depth);
    ids.instance_id = std::move(fb.instance_id);
  } else {
    fb = Framebuffer{};
    ids = rasterize_ids(items, target, config_.render.cull_backfaces);
  }
  out.annotations = annotate(out.scene, ids.instance_id, &out.landmarks);
  if (keep_buffers) out.buffers = std::move(ids);
  return out;
}

std::string image_path(std::uint64_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "images/%06llu.png", static_cast<unsigned long long>(index));
  return name;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1,
                                                                        std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
}

GenerateResult generate_dataset(const Pipeline& pipeline, const GenerateOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path& out = options.out;
  std::error_code ec;
  fs::create_directories(out / "images", ec);
  fs::create_directories(out / "annotations", ec);
  if (options.debug_maps) fs::create_directories(out / "debug", ec);
  if (!fs::is_directory(out / "images") || !fs::is_directory(out / "annotations"))
    throw IoError("cannot create output directories under " + out.string());
  write_text(out / "INCOMPLETE", "generation in progress or failed\n");
  for (const auto& entry : fs::directory_iterator(out / "images"))
    if (is_dataset_image(entry.path())) fs::remove(entry.path());

  const auto n = static_cast<std::size_t>(pipeline.config().generation.num_images);
  GenerateResult result;
  result.images.resize(n);
  result.warnings.resize(n);
  std::vector<std::pair<int, int>> base(n);
  std::vector<std::string> environment(n);
  std::vector<int> requested(n);
  std::vector<double> seconds(n);

  parallel_for(n, options.jobs, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    ProducedImage p = pipeline.produce(i, options.debug_maps);
    write_png(out / p.annotations.path, p.image);
    if (options.debug_maps) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "%06zu", i);
      write_png16(out / "debug" / (std::string(stem) + "_depth.png"), depth_millimeters(p.buffers.depth));
      write_png16(out / "debug" / (std::string(stem) + "_id.png"), p.buffers.instance_id);
    }
    base[i] = {p.base_width, p.base_height};
    environment[i] = p.scene.environment_id;
    requested[i] = p.scene.requested_faces;
    result.warnings[i] = std::move(p.scene.warnings);
    result.images[i] = std::move(p.annotations);
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  write_annotations(out / "annotations" / "wider.txt", result.images, AnnotationFormat::wider_txt);
  write_annotations(out / "annotations" / "coco.json", result.images, AnnotationFormat::coco_json);

  std::ostringstream stats_csv;
  try {
    write_stats_csv(stats_csv, dataset_stats(result.images));
  } catch (const EmptyDatasetError&) {
    write_stats_csv(stats_csv, DatasetStats{});
  }
  write_text(out / "stats.csv", stats_csv.str());

  ordered_json manifest;
  manifest["tool"] = "facegen";
  manifest["version"] = kToolVersion;
  manifest["seed"] = pipeline.config().generation.seed;
  manifest["config"] = ordered_json::parse(to_json(pipeline.config()).dump());
  manifest["num_images"] = n;
  ordered_json records = ordered_json::array();
  std::size_t annotation_offset = 0;
  std::size_t wider_line = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const AnnotatedImage& img = result.images[i];
    records.push_back({{"index", i},
                       {"path", img.path},
                       {"environment", environment[i]},
                       {"base_resolution", {base[i].first, base[i].second}},
                       {"requested_faces", requested[i]},
                       {"faces", img.faces.size()},
                       {"annotation_offset", annotation_offset},
                       {"wider_line", wider_line},
                       {"warnings", result.warnings[i]}});
    annotation_offset += img.faces.size();
    wider_line += 2 + img.faces.size();
  }
  manifest["images"] = std::move(records);
  write_text(out / "manifest.json", manifest.dump(1) + "\n");

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ordered_json timings;
  timings["jobs"] = options.jobs;
  timings["total_seconds"] = result.seconds;
  timings["images_per_second"] = result.seconds > 0.0 ? static_cast<double>(n) / result.seconds : 0.0;
  timings["per_image_seconds"] = seconds;
  write_text(out / "timings.json", timings.dump(1) + "\n");

  fs::remove(out / "INCOMPLETE", ec);
  return result;
}

Rgb8Image draw_overlay(const Rgb8Image& image, const AnnotatedImage& annotations,
                       const std::vector<std::vector<Projection>>& landmarks) {
  Rgb8Image out = image;
  const Rgb8 dot{255, 220, 0};
  for (const auto& face : landmarks)
    for (const Projection& p : face) {
      if (p.behind_camera) continue;
      const int x = static_cast<int>(std::floor(p.x)), y = static_cast<int>(std::floor(p.y));
      put_pixel(out, x, y, dot);
      put_pixel(out, x + 1, y, dot);
      put_pixel(out, x, y + 1, dot);
      put_pixel(out, x - 1, y, dot);
      put_pixel(out, x, y - 1, dot);
    }
  for (const FaceAnnotation& f : annotations.faces) {
    if (f.box.w <= 0 || f.box.h <= 0) continue;
    const Rgb8 color = f.ignored ? Rgb8{255, 0, 0} : Rgb8{0, 255, 0};
    const int x0 = static_cast<int>(f.box.x), y0 = static_cast<int>(f.box.y);
    const int x1 = x0 + static_cast<int>(f.box.w) - 1, y1 = y0 + static_cast<int>(f.box.h) - 1;
    for (int x = x0; x <= x1; ++x) {
      put_pixel(out, x, y0, color);
      put_pixel(out, x, y1, color);
    }
    for (int y = y0; y <= y1; ++y) {
      put_pixel(out, x0, y, color);
      put_pixel(out, x1, y, color);
    }
  }
  return out;
}

}  // namespace facegen
