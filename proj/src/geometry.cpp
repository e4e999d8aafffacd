#include "facegen/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

#include "facegen/errors.hpp"

namespace facegen {

namespace {

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

Vec3 mean(std::span<const Vec3> points) {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

int covariance_rank(std::span<const Vec3> points, const Vec3& center) {
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) cov += (p - center) * (p - center).transpose();
  const Eigen::JacobiSVD<Mat3> svd(cov);
  const auto& s = svd.singularValues();
  if (!(s(0) > 1e-18)) return 0;
  int rank = 0;
  for (int i = 0; i < 3; ++i)
    if (s(i) > 1e-12 * s(0)) ++rank;
  return rank;
}

}  // namespace

Mat3 euler_rotation(const Pose& pose) {
  const double p = radians(pose.pitch);
  const double y = radians(pose.yaw);
  const double r = radians(pose.roll);
  Mat3 yaw;
  yaw << std::cos(y), 0, std::sin(y), 0, 1, 0, -std::sin(y), 0, std::cos(y);
  Mat3 pitch;
  pitch << 1, 0, 0, 0, std::cos(p), -std::sin(p), 0, std::sin(p), std::cos(p);
  Mat3 roll;
  roll << std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r), 0, 0, 0, 1;
  return roll * pitch * yaw;
}

RigidTransform RigidTransform::then(const RigidTransform& next) const {
  RigidTransform out;
  out.rotation = next.rotation * rotation;
  out.scale = next.scale * scale;
  out.translation = next.scale * (next.rotation * translation) + next.translation;
  return out;
}

FaceModel transform_model(const FaceModel& model, const RigidTransform& transform) {
  FaceModel out = model;
  for (Vec3& v : out.mesh.vertices) v = transform.apply(v);
  for (Vec3& n : out.mesh.normals) n = transform.rotation * n;
  for (Landmark& l : out.landmarks) l.position = transform.apply(l.position);
  return out;
}

FaceModel rotate_about_landmark_center(const FaceModel& model, const Pose& pose) {
  const Vec3 center = model.landmark_centroid();
  RigidTransform t;
  t.rotation = euler_rotation(pose);
  t.translation = center - t.rotation * center;
  return transform_model(model, t);
}

RigidTransform align_to_anchor(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size() || source.empty())
    throw DegenerateError("alignment needs two point sets of equal, non-zero size");
  const Vec3 mu_src = mean(source);
  const Vec3 mu_dst = mean(target);
  if (covariance_rank(source, mu_src) < 2) throw DegenerateError("source landmarks are collinear or coincident");
  if (covariance_rank(target, mu_dst) < 2) throw DegenerateError("anchor landmarks are collinear or coincident");

  const double n = static_cast<double>(source.size());
  Mat3 cross = Mat3::Zero();
  double src_var = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 a = source[i] - mu_src;
    cross += (target[i] - mu_dst) * a.transpose();
    src_var += a.squaredNorm();
  }
  cross /= n;
  src_var /= n;

  const Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 d = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2) = -1.0;

  RigidTransform t;
  t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  t.scale = svd.singularValues().dot(d) / src_var;
  t.translation = mu_dst - t.scale * (t.rotation * mu_src);
  return t;
}

double alignment_residual(const RigidTransform& transform, std::span<const Vec3> source,
                          std::span<const Vec3> target) {
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) sum += (transform.apply(source[i]) - target[i]).squaredNorm();
  return sum;
}

double Camera::tan_half_vertical() const { return std::tan(radians(vertical_fov) / 2.0); }

double Camera::tan_half_horizontal() const {
  return tan_half_vertical() * static_cast<double>(image_width) / image_height;
}

double Camera::focal_px() const { return image_height / 2.0 / tan_half_vertical(); }

Vec3 Camera::ray_direction(double px, double py) const {
  const double f = focal_px();
  const Vec3 local((px - image_width / 2.0) / f, -(py - image_height / 2.0) / f, -1.0);
  return (orientation * local).normalized();
}

Camera Camera::with_resolution(int width, int height) const {
  Camera c = *this;
  c.image_width = width;
  c.image_height = height;
  return c;
}

void validate_camera(const Camera& camera) {
  if (!(camera.vertical_fov > 0.0 && camera.vertical_fov < 180.0))
    throw ValidationError("vertical_fov must lie in (0, 180) degrees");
  if (camera.image_width < 8 || camera.image_height < 8) throw ValidationError("camera image must be at least 8x8");
  const Mat3& r = camera.orientation;
  if (!(r.transpose() * r).isApprox(Mat3::Identity(), 1e-9) || std::abs(r.determinant() - 1.0) > 1e-9)
    throw ValidationError("camera orientation must be a rotation");
}

Projection project(const Camera& camera, const Vec3& world) {
  const Vec3 c = camera.to_camera(world);
  Projection out;
  out.depth = -c.z();
  if (!(out.depth > kNearPlane)) {
    out.behind_camera = true;
    return out;
  }
  const double f = camera.focal_px();
  out.x = camera.image_width / 2.0 + f * c.x() / out.depth;
  out.y = camera.image_height / 2.0 - f * c.y() / out.depth;
  return out;
}

}  // namespace facegen
