#pragma once

#include <span>

#include "facegen/model.hpp"

namespace facegen {

// Head pose in degrees.
struct Pose {
  double pitch = 0.0;
  double yaw = 0.0;
  double roll = 0.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

// R = R_roll(Z) * R_pitch(X) * R_yaw(Y): yaw is applied first.
Mat3 euler_rotation(const Pose& pose);

// Rotates vertices, normals and landmarks about the landmark centroid.
FaceModel rotate_about_landmark_center(const FaceModel& model, const Pose& pose);

// x -> scale * rotation * x + translation
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  RigidTransform then(const RigidTransform& next) const;
};

// Least-squares similarity transform mapping `source` onto `target`
// (orthogonal Procrustes with uniform scale on centered point sets).
// Throws DegenerateError when either point set has covariance rank < 2.
RigidTransform align_to_anchor(std::span<const Vec3> source, std::span<const Vec3> target);

// Sum of squared residuals |T(source_i) - target_i|^2.
double alignment_residual(const RigidTransform& transform, std::span<const Vec3> source,
                          std::span<const Vec3> target);

// Applies `transform` to a model's geometry and landmarks.
FaceModel transform_model(const FaceModel& model, const RigidTransform& transform);

inline constexpr double kNearPlane = 0.01;

// Pinhole camera looking along -Z of its frame with +Y up.
struct Camera {
  Vec3 position = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();  // columns: camera axes in world space
  double vertical_fov = 45.0;           // degrees
  int image_width = 1024;
  int image_height = 768;

  double focal_px() const;
  double tan_half_vertical() const;
  double tan_half_horizontal() const;
  Vec3 to_camera(const Vec3& world) const { return orientation.transpose() * (world - position); }
  // Unit world-space direction through continuous pixel coordinate (px, py).
  Vec3 ray_direction(double px, double py) const;
  Camera with_resolution(int width, int height) const;
};

// Validates the camera invariants; throws ValidationError.
void validate_camera(const Camera& camera);

struct Projection {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;  // meters along the viewing axis
  bool behind_camera = false;
};

// Pixel (i, j) covers [i, i+1) x [j, j+1); its center is (i + 0.5, j + 0.5).
Projection project(const Camera& camera, const Vec3& world);

}  // namespace facegen
