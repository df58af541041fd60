// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <vector>

#include "nerfgan/rng.hpp"

namespace nerfgan {

inline constexpr double kPi = 3.14159265358979323846;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Camera pose on a viewing sphere. Convention used everywhere in this
/// project: world-up is +z, pitch is the polar angle measured from +z
/// (so pitch = pi/2 is the equator), yaw rotates about +z starting at +x.
struct Pose {
  double pitch = kPi / 2;  // (0, pi)
  double yaw = 0.0;        // [0, 2*pi)
};

enum class PriorKind { kGaussian, kUniformHemisphere };

struct PosePrior {
  PriorKind kind = PriorKind::kGaussian;
  Pose mean;                 // gaussian only
  double pitch_stddev = 0.0; // gaussian only, radians
  double yaw_stddev = 0.0;   // gaussian only, radians

  static PosePrior gaussian(Pose mean, double pitch_stddev, double yaw_stddev);
  static PosePrior uniform_hemisphere();

  void validate() const;
  Pose mean_pose() const;  // gaussian: mean; hemisphere: (pi/4 area median, pi)
};

struct Camera {
  Eigen::Vector3d position;
  Eigen::Matrix3d rotation;  // columns: right, up, forward (orthonormal)
  double fov = 0.0;          // full vertical field of view, radians
  double radius = 0.0;
};

struct RayBundle {
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> origins;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> directions;  // unit norm
  std::vector<int> pixel_index;
};

Pose sample_pose(const PosePrior& prior, RngStream& rng);
Camera pose_to_camera(const Pose& pose, double radius, double fov);
RayBundle generate_rays(const Camera& camera, int height, int width);

/// Squared pose distance used by the MSE objectives. With `wraparound` the
/// yaw difference is reduced to [-pi, pi] first; defaults to plain reals.
double pose_squared_distance(const Pose& a, const Pose& b, bool wraparound = false);

}  // namespace nerfgan
