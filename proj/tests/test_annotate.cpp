#include <doctest.h>

#include <sstream>

#include "facegen/annotate.hpp"
#include "facegen/errors.hpp"
#include "test_util.hpp"

using namespace facegen;

namespace {

std::vector<Projection> points(std::initializer_list<std::pair<double, double>> xy) {
  std::vector<Projection> out;
  for (auto [x, y] : xy) out.push_back({x, y, 1.0, false});
  return out;
}

FaceAnnotation face(Box box, bool ignored = false, OcclusionLevel occ = OcclusionLevel::none) {
  FaceAnnotation f;
  f.box = box;
  f.ignored = ignored;
  f.occlusion = occ;
  f.visibility = 0.75;
  f.pose = {1.5, -20.25, 3};
  const ScaleBinning sb = scale_bin(box.h);
  f.scale_bin = sb.bin;
  f.scale_out_of_range = sb.out_of_range;
  return f;
}

std::vector<AnnotatedImage> sample_images() {
  AnnotatedImage a{0, "images/000000.png", 640, 480, {face({10, 20, 40, 60}), face({100, 50, 9, 12}, true)}};
  AnnotatedImage b{1, "images/000001.png", 640, 480, {face({0, 0, 20, 25}, false, OcclusionLevel::heavy)}};
  AnnotatedImage c{2, "images/000002.png", 640, 480, {}};
  for (auto* img : {&a, &b, &c})
    for (auto& f : img->faces) f.image_id = img->image_id;
  return {a, b, c};
}

}  // namespace

TEST_CASE("landmark boxes") {
  const auto p = points({{10, 20}, {50, 80}, {30, 50}});
  CHECK(landmarks_to_box(p, 640, 480, 0.0) == Box{10, 20, 40, 60});
  CHECK(landmarks_to_box(p, 640, 480, 0.1) == Box{10, 14, 40, 66});
  CHECK(landmarks_to_box(points({{-5, 20}, {30, 40}, {10, 30}}), 640, 480, 0.0) == Box{0, 20, 30, 20});
  CHECK(landmarks_to_box(points({{10.2, 20.7}, {49.5, 79.1}, {30, 50}}), 640, 480, 0.0) == Box{10, 20, 40, 60});

  auto hidden = points({{10, 20}, {50, 80}, {30, 50}});
  hidden[1].behind_camera = true;
  CHECK_FALSE(landmarks_to_box(hidden, 640, 480).has_value());
}

TEST_CASE("boxes contain every in-image landmark") {
  test_util::Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Projection> p;
    for (int i = 0; i < 50; ++i) p.push_back({rng.uniform(-50, 700), rng.uniform(-50, 530), 1.0, false});
    const auto box = landmarks_to_box(p, 640, 480, rng.uniform(0, 0.3));
    REQUIRE(box);
    CHECK(box->x >= 0);
    CHECK(box->y >= 0);
    CHECK(box->right() <= 640);
    CHECK(box->bottom() <= 480);
    for (const Projection& q : p)
      if (q.x >= 0 && q.x <= 640 && q.y >= 0 && q.y <= 480) {
        CHECK(q.x >= box->x);
        CHECK(q.x <= box->right());
        CHECK(q.y >= box->y);
        CHECK(q.y <= box->bottom());
      }
  }
}

TEST_CASE("scale bins") {
  CHECK(scale_bin(20).bin == ScaleBin::tiny);
  CHECK(scale_bin(40).bin == ScaleBin::medium);
  CHECK(scale_bin(96).bin == ScaleBin::large);
  CHECK(scale_bin(30).bin == ScaleBin::medium);
  CHECK(scale_bin(50).bin == ScaleBin::large);
  CHECK(scale_bin(10).bin == ScaleBin::tiny);
  CHECK_FALSE(scale_bin(400).out_of_range);
  CHECK(scale_bin(5).bin == ScaleBin::tiny);
  CHECK(scale_bin(5).out_of_range);
  CHECK(scale_bin(700).bin == ScaleBin::large);
  CHECK(scale_bin(700).out_of_range);
}

TEST_CASE("visibility and occlusion levels") {
  CHECK(visibility_fraction(50, 100) == 0.5);
  CHECK_FALSE(visibility_fraction(0, 0).has_value());
  CHECK(occlusion_level(0.4, true) == OcclusionLevel::heavy);
  CHECK(occlusion_level(0.4, false) == OcclusionLevel::heavy);
  CHECK(occlusion_level(0.8, true) == OcclusionLevel::landmark);
  CHECK(occlusion_level(1.0, false) == OcclusionLevel::none);
}

TEST_CASE("half-covered face is half visible") {
  PipelineConfig config = preset("mafa_occ");
  config.render.target_width = 640;
  config.render.target_height = 480;
  const Pipeline pipeline(config, test_util::builtin_library());
  CHECK(test_util::half_cover_visibility(pipeline) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("dataset statistics") {
  std::vector<AnnotatedImage> images(1);
  images[0].faces = {face({0, 0, 15, 20}), face({0, 0, 30, 40}), face({0, 0, 60, 100})};
  const DatasetStats s = dataset_stats(images);
  CHECK(s.total == 3);
  CHECK(s.bins[0].count == 1);
  CHECK(s.bins[1].count == 1);
  CHECK(s.bins[2].count == 1);

  images[0].faces = {face({0, 0, 60, 96}), face({0, 0, 60, 96})};
  CHECK(dataset_stats(images).bins[2].frac_height_in_range == 1.0);
  CHECK(dataset_stats(images).bins[2].frac_width_in_range == 1.0);

  images[0].faces = {face({0, 0, 60, 96}, true)};
  CHECK_THROWS_AS(dataset_stats(images), EmptyDatasetError);
  CHECK_THROWS_AS(dataset_stats({}), EmptyDatasetError);

  std::ostringstream csv;
  write_stats_csv(csv, dataset_stats(sample_images()));
  CHECK(csv.str().rfind("bin,count,min_h,max_h,frac_in_range\n", 0) == 0);
}

TEST_CASE("WIDER text format") {
  std::vector<AnnotatedImage> one(1);
  one[0].path = "images/000000.png";
  one[0].faces = {face({1, 2, 30, 40}), face({5, 6, 9, 12}, true, OcclusionLevel::landmark)};
  std::ostringstream out;
  write_wider(out, one);
  CHECK(out.str() == "images/000000.png\n2\n1 2 30 40 0 0\n5 6 9 12 1 1\n");

  const auto images = sample_images();
  std::ostringstream text;
  write_wider(text, images);
  std::istringstream in(text.str());
  const auto back = parse_wider(in, "wider.txt");
  REQUIRE(back.size() == images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    REQUIRE(back[i].faces.size() == images[i].faces.size());
    CHECK(back[i].path == images[i].path);
    for (std::size_t k = 0; k < images[i].faces.size(); ++k) {
      CHECK(back[i].faces[k].box == images[i].faces[k].box);
      CHECK(back[i].faces[k].ignored == images[i].faces[k].ignored);
      CHECK(back[i].faces[k].occlusion == images[i].faces[k].occlusion);
    }
  }

  std::istringstream bad("images/a.png\n2\n1 2 3 4 0 0\n1 2 x 4 0 0\n");
  try {
    parse_wider(bad, "bad.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("COCO JSON round trip") {
  const auto images = sample_images();
  const std::string doc = coco_json(images);
  CHECK(doc.find("\"ignore\": 1") != std::string::npos);
  const auto back = parse_coco(doc, "coco.json");
  REQUIRE(back.size() == images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    CHECK(back[i].path == images[i].path);
    CHECK(back[i].width == 640);
    REQUIRE(back[i].faces.size() == images[i].faces.size());
    for (std::size_t k = 0; k < images[i].faces.size(); ++k) {
      const FaceAnnotation &a = back[i].faces[k], &b = images[i].faces[k];
      CHECK(a.box == b.box);
      CHECK(a.ignored == b.ignored);
      CHECK(a.occlusion == b.occlusion);
      CHECK(a.visibility == b.visibility);
      CHECK(a.scale_bin == b.scale_bin);
      CHECK(a.pose == b.pose);
    }
  }
  CHECK(coco_json(back) == doc);
}

TEST_CASE("annotation files pick their format by extension") {
  const auto dir = test_util::scratch_dir("annotations");
  const auto images = sample_images();
  write_annotations(dir / "a.json", images, AnnotationFormat::coco_json);
  write_annotations(dir / "a.txt", images, AnnotationFormat::wider_txt);
  CHECK(read_annotations(dir / "a.json")[1].faces[0].box == images[1].faces[0].box);
  CHECK(read_annotations(dir / "a.txt")[0].faces[1].ignored);
  CHECK_THROWS_AS(write_annotations(dir / "missing" / "x.json", images, AnnotationFormat::coco_json), IoError);
}
