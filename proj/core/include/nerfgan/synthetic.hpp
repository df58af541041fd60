// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "nerfgan/geometry.hpp"
#include "nerfgan/image.hpp"

namespace nerfgan {

/// Toy object: an axis-aligned solid primitive with three content factors
/// (hue, elongation, size). The optional hue gradient tints the local +x
/// side differently from -x, which makes yaw observable in appearance.
struct SceneParams {
  enum Kind { kBox = 0, kEllipsoid = 1, kCylinder = 2 };
  int kind = kBox;
  double hue = 0.0;           // [0,1)
  double hue_gradient = 0.35; // hue shift from -x to +x side; 0 = mirror-symmetric
  Eigen::Vector3d scale = Eigen::Vector3d(0.3, 0.2, 0.2);  // half-extents

  static constexpr int kNumKinds = 3;
};

struct SyntheticOptions {
  double camera_radius = 1.3;
  double camera_fov = kPi / 4;
  double ambient = 0.25;
  double min_size = 0.16;
  double max_size = 0.30;
  double max_elongation = 2.0;
  double hue_gradient = 0.35;
  int supersample = 2;  // n x n subpixel rays
};

Eigen::Vector3d hsv_to_rgb(double h, double s, double v);

/// Analytic ray-traced render of one scene: solid primitive, Lambertian
/// shading lit from the camera, black background. This rasterizer is the
/// ground-truth oracle for the synthetic dataset and is independent of the
/// volumetric renderer.
ImageTensor rasterize_scene(const SceneParams& scene, const Pose& pose, int resolution,
                            const SyntheticOptions& options = {});

SceneParams random_scene(RngStream& rng, const SyntheticOptions& options = {});

}  // namespace nerfgan
