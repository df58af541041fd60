// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace nerfgan {

namespace {
// Keep gaussian samples (and pole rejection) a hair away from the poles so
// the look-at frame stays well defined.
constexpr double kPoleMargin = 1e-3;
}  // namespace

PosePrior PosePrior::gaussian(Pose mean, double pitch_stddev, double yaw_stddev) {
  PosePrior p;
  p.kind = PriorKind::kGaussian;
  p.mean = mean;
  p.pitch_stddev = pitch_stddev;
  p.yaw_stddev = yaw_stddev;
  p.validate();
  return p;
}

PosePrior PosePrior::uniform_hemisphere() {
  PosePrior p;
  p.kind = PriorKind::kUniformHemisphere;
  return p;
}

void PosePrior::validate() const {
  if (kind == PriorKind::kGaussian) {
    if (pitch_stddev < 0 || yaw_stddev < 0)
      throw ConfigError("pose prior: stddev must be nonnegative");
    if (!(mean.pitch > 0 && mean.pitch < kPi))
      throw ConfigError("pose prior: mean pitch out of (0, pi)");
    if (!(mean.yaw >= 0 && mean.yaw < 2 * kPi))
      throw ConfigError("pose prior: mean yaw out of [0, 2*pi)");
  }
}

Pose PosePrior::mean_pose() const {
  if (kind == PriorKind::kGaussian) return mean;
  return Pose{kPi / 4, kPi};
}

Pose sample_pose(const PosePrior& prior, RngStream& rng) {
  prior.validate();
  Pose pose;
  if (prior.kind == PriorKind::kGaussian) {
    pose.pitch = rng.normal(prior.mean.pitch, prior.pitch_stddev);
    pose.yaw = rng.normal(prior.mean.yaw, prior.yaw_stddev);
    pose.pitch = std::clamp(pose.pitch, kPoleMargin, kPi - kPoleMargin);
    pose.yaw = std::clamp(pose.yaw, 0.0, 2 * kPi * (1.0 - 1e-12));
  } else {
    // Area-uniform on the upper hemisphere: cos(pitch) ~ U(0,1], yaw ~ U[0,2pi).
    const double u = rng.uniform01();
    pose.pitch = std::acos(1.0 - u);        // u=0 -> pitch 0 excluded below
    pose.pitch = std::max(pose.pitch, kPoleMargin);
    pose.yaw = rng.uniform(0.0, 2 * kPi);
  }
  return pose;
}

Camera pose_to_camera(const Pose& pose, double radius, double fov) {
  if (!(radius > 0)) throw ConfigError("pose_to_camera: radius must be positive");
  if (!(fov > 0 && fov < kPi)) throw ConfigError("pose_to_camera: fov must be in (0, pi)");
  if (!(pose.pitch > 0 && pose.pitch < kPi))
    throw ConfigError("pose_to_camera: pitch at a pole has no defined up vector");

  const double sp = std::sin(pose.pitch), cp = std::cos(pose.pitch);
  const double sy = std::sin(pose.yaw), cy = std::cos(pose.yaw);

  Camera cam;
  cam.position = radius * Eigen::Vector3d(sp * cy, sp * sy, cp);
  const Eigen::Vector3d forward = -cam.position.normalized();  // looks at the origin
  const Eigen::Vector3d world_up(0, 0, 1);
  const Eigen::Vector3d right = forward.cross(world_up).normalized();
  const Eigen::Vector3d up = right.cross(forward);
  cam.rotation.col(0) = right;
  cam.rotation.col(1) = up;
  cam.rotation.col(2) = forward;
  cam.fov = fov;
  cam.radius = radius;
  return cam;
}

RayBundle generate_rays(const Camera& camera, int height, int width) {
  if (height < 1 || width < 1) throw ConfigError("generate_rays: resolution must be >= 1");
  const int n = height * width;
  RayBundle bundle;
  bundle.origins.resize(n, 3);
  bundle.directions.resize(n, 3);
  bundle.pixel_index.resize(static_cast<std::size_t>(n));

  const Eigen::Vector3d right = camera.rotation.col(0);
  const Eigen::Vector3d up = camera.rotation.col(1);
  const Eigen::Vector3d forward = camera.rotation.col(2);
  const double half = std::tan(camera.fov / 2);
  const double aspect = static_cast<double>(width) / height;

  for (int i = 0; i < height; ++i) {
    // v runs top-to-bottom so row 0 is the top of the image.
    const double v = (1.0 - 2.0 * (i + 0.5) / height) * half;
    for (int j = 0; j < width; ++j) {
      const double u = (2.0 * (j + 0.5) / width - 1.0) * half * aspect;
      const int idx = i * width + j;
      const Eigen::Vector3d dir = (forward + u * right + v * up).normalized();
      bundle.origins.row(idx) = camera.position.transpose();
      bundle.directions.row(idx) = dir.transpose();
      bundle.pixel_index[static_cast<std::size_t>(idx)] = idx;
    }
  }
  return bundle;
}

double pose_squared_distance(const Pose& a, const Pose& b, bool wraparound) {
  const double dp = a.pitch - b.pitch;
  double dy = a.yaw - b.yaw;
  if (wraparound) {
    dy = std::remainder(dy, 2 * kPi);
  }
  return dp * dp + dy * dy;
}

}  // namespace nerfgan
