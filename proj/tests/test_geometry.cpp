#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "facegen/assets.hpp"
#include "facegen/errors.hpp"
#include "facegen/geometry.hpp"
#include "test_util.hpp"

using namespace facegen;

namespace {

Mat3 random_rotation(test_util::Rng& rng) {
  return euler_rotation({rng.uniform(-180, 180), rng.uniform(-180, 180), rng.uniform(-180, 180)});
}

}  // namespace

TEST_CASE("euler rotation conventions") {
  CHECK(euler_rotation({}).isApprox(Mat3::Identity(), 1e-15));
  const Vec3 r = euler_rotation({0, 90, 0}) * Vec3(1, 0, 0);
  CHECK((r - Vec3(0, 0, -1)).norm() < 1e-12);

  const Mat3 m = euler_rotation({10, 20, 30});
  CHECK((m.transpose() * m - Mat3::Identity()).norm() < 1e-12);
  CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-12));

  // yaw applied first, then pitch, then roll
  const double d = std::numbers::pi / 180.0;
  const Mat3 z = Eigen::AngleAxisd(30 * d, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 x = Eigen::AngleAxisd(10 * d, Vec3::UnitX()).toRotationMatrix();
  const Mat3 y = Eigen::AngleAxisd(20 * d, Vec3::UnitY()).toRotationMatrix();
  CHECK((m - z * x * y).norm() < 1e-12);
}

TEST_CASE("rotation about the landmark centroid") {
  const FaceModel head = make_test_head(3, 2);
  const FaceModel same = rotate_about_landmark_center(head, {});
  for (std::size_t i = 0; i < head.mesh.vertices.size(); ++i)
    CHECK((same.mesh.vertices[i] - head.mesh.vertices[i]).norm() < 1e-12);

  test_util::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose pose{rng.uniform(-90, 90), rng.uniform(-90, 90), rng.uniform(-90, 90)};
    const FaceModel turned = rotate_about_landmark_center(head, pose);
    CHECK((turned.landmark_centroid() - head.landmark_centroid()).norm() < 1e-9);
    const Vec3 c = head.landmark_centroid();
    const Mat3 inverse = euler_rotation(pose).transpose();
    for (std::size_t i = 0; i < head.mesh.vertices.size(); i += 7)
      CHECK((inverse * (turned.mesh.vertices[i] - c) + c - head.mesh.vertices[i]).norm() < 1e-6);
  }
}

TEST_CASE("similarity alignment") {
  const FaceModel head = make_test_head(9, 2);
  const std::vector<Vec3> pts = head.landmark_positions();
  const RigidTransform self = align_to_anchor(pts, pts);
  CHECK((self.rotation - Mat3::Identity()).norm() < 1e-9);
  CHECK(self.translation.norm() < 1e-9);
  CHECK(self.scale == doctest::Approx(1.0).epsilon(1e-9));

  test_util::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    RigidTransform truth;
    truth.rotation = random_rotation(rng);
    truth.translation = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    truth.scale = rng.uniform(0.2, 5.0);
    std::vector<Vec3> target;
    for (const Vec3& p : pts) target.push_back(truth.apply(p));
    const RigidTransform got = align_to_anchor(pts, target);
    CHECK((got.rotation - truth.rotation).norm() < 1e-6);
    CHECK((got.translation - truth.translation).norm() < 1e-6);
    CHECK(std::abs(got.scale - truth.scale) / truth.scale < 1e-6);
    CHECK(alignment_residual(got, pts, target) < 1e-12);
  }

  const std::vector<Vec3> same(50, Vec3(1, 2, 3));
  CHECK_THROWS_AS(align_to_anchor(same, pts), DegenerateError);
  std::vector<Vec3> line;
  for (int i = 0; i < 50; ++i) line.emplace_back(i, 2 * i, 0);
  CHECK_THROWS_AS(align_to_anchor(line, pts), DegenerateError);
}

TEST_CASE("alignment never returns a reflection") {
  const std::vector<Vec3> pts = make_test_head(1, 2).landmark_positions();
  std::vector<Vec3> mirrored;
  for (const Vec3& p : pts) mirrored.emplace_back(-p.x(), p.y(), p.z());
  const RigidTransform t = align_to_anchor(pts, mirrored);
  CHECK(t.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pinhole projection") {
  Camera cam;
  cam.image_width = 640;
  cam.image_height = 480;
  cam.vertical_fov = 45.0;
  const Projection center = project(cam, Vec3(0, 0, -5));
  CHECK(center.x == doctest::Approx(320.0));
  CHECK(center.y == doctest::Approx(240.0));
  CHECK(center.depth == doctest::Approx(5.0));
  CHECK_FALSE(center.behind_camera);

  CHECK(project(cam, Vec3(0, 0, 0)).behind_camera);
  CHECK(project(cam, Vec3(0, 0, 3)).behind_camera);

  const double d = 7.0;
  const Projection top = project(cam, Vec3(0, std::tan(22.5 * std::numbers::pi / 180.0) * d, -d));
  CHECK(top.y == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(top.y) < 1e-9);

  // ray through a pixel re-projects onto it
  test_util::Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double px = rng.uniform(0, 640), py = rng.uniform(0, 480);
    const Projection p = project(cam, cam.position + 3.0 * cam.ray_direction(px, py));
    CHECK(std::abs(p.x - px) < 1e-9);
    CHECK(std::abs(p.y - py) < 1e-9);
  }
}

TEST_CASE("camera validation") {
  Camera cam;
  CHECK_NOTHROW(validate_camera(cam));
  cam.vertical_fov = 0.0;
  CHECK_THROWS_AS(validate_camera(cam), ValidationError);
  cam.vertical_fov = 45.0;
  cam.image_width = 0;
  CHECK_THROWS_AS(validate_camera(cam), ValidationError);
}
