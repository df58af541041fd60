// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nerfgan {

Eigen::Vector3d hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  bool valid = false;
};

Hit intersect_ellipsoid(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                        const Eigen::Vector3d& s) {
  // Solve |(o + t d) / s|^2 = 1.
  const Eigen::Vector3d os = o.cwiseQuotient(s);
  const Eigen::Vector3d ds = d.cwiseQuotient(s);
  const double a = ds.squaredNorm();
  const double b = 2.0 * os.dot(ds);
  const double c = os.squaredNorm() - 1.0;
  const double disc = b * b - 4 * a * c;
  Hit hit;
  if (disc < 0) return hit;
  const double sq = std::sqrt(disc);
  double t = (-b - sq) / (2 * a);
  if (t < 1e-6) t = (-b + sq) / (2 * a);
  if (t < 1e-6) return hit;
  hit.t = t;
  const Eigen::Vector3d p = o + t * d;
  hit.normal = p.cwiseQuotient(s.cwiseProduct(s)).normalized();
  hit.valid = true;
  return hit;
}

Hit intersect_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& s) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  int axis = -1;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-12) {
      if (std::abs(o[i]) > s[i]) return {};
      continue;
    }
    double t0 = (-s[i] - o[i]) / d[i];
    double t1 = (s[i] - o[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > tmin) {
      tmin = t0;
      axis = i;
    }
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return {};
  }
  Hit hit;
  if (tmin < 1e-6 || axis < 0) return hit;
  hit.t = tmin;
  const Eigen::Vector3d p = o + tmin * d;
  hit.normal = Eigen::Vector3d::Zero();
  hit.normal[axis] = p[axis] > 0 ? 1.0 : -1.0;
  hit.valid = true;
  return hit;
}

Hit intersect_cylinder(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                       const Eigen::Vector3d& s) {
  // Elliptic cylinder along z with half-height s.z; side (x/sx)^2+(y/sy)^2=1.
  Hit best;
  {
    const double a = (d.x() / s.x()) * (d.x() / s.x()) + (d.y() / s.y()) * (d.y() / s.y());
    const double b = 2.0 * (o.x() * d.x() / (s.x() * s.x()) + o.y() * d.y() / (s.y() * s.y()));
    const double c = (o.x() / s.x()) * (o.x() / s.x()) + (o.y() / s.y()) * (o.y() / s.y()) - 1.0;
    const double disc = b * b - 4 * a * c;
    if (disc >= 0 && a > 1e-12) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (t < 1e-6 || t >= best.t) continue;
        const Eigen::Vector3d p = o + t * d;
        if (std::abs(p.z()) > s.z()) continue;
        best.t = t;
        best.normal =
            Eigen::Vector3d(p.x() / (s.x() * s.x()), p.y() / (s.y() * s.y()), 0).normalized();
        best.valid = true;
      }
    }
  }
  for (double cap : {-1.0, 1.0}) {
    if (std::abs(d.z()) < 1e-12) continue;
    const double t = (cap * s.z() - o.z()) / d.z();
    if (t < 1e-6 || t >= best.t) continue;
    const Eigen::Vector3d p = o + t * d;
    const double rx = p.x() / s.x(), ry = p.y() / s.y();
    if (rx * rx + ry * ry > 1.0) continue;
    best.t = t;
    best.normal = Eigen::Vector3d(0, 0, cap);
    best.valid = true;
  }
  return best;
}

Hit intersect(const SceneParams& scene, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  switch (scene.kind) {
    case SceneParams::kBox: return intersect_box(o, d, scene.scale);
    case SceneParams::kEllipsoid: return intersect_ellipsoid(o, d, scene.scale);
    case SceneParams::kCylinder: return intersect_cylinder(o, d, scene.scale);
    default: throw ConfigError("rasterize_scene: unknown shape kind");
  }
}

}  // namespace

ImageTensor rasterize_scene(const SceneParams& scene, const Pose& pose, int resolution,
                            const SyntheticOptions& options) {
  const Camera cam = pose_to_camera(pose, options.camera_radius, options.camera_fov);
  const Eigen::Vector3d right = cam.rotation.col(0);
  const Eigen::Vector3d up = cam.rotation.col(1);
  const Eigen::Vector3d forward = cam.rotation.col(2);
  const double half = std::tan(cam.fov / 2);

  ImageTensor img(resolution, resolution);
  const int ss = std::max(1, options.supersample);
  const double inv_ss = 1.0 / ss;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      for (int si = 0; si < ss; ++si)
        for (int sj = 0; sj < ss; ++sj) {
          const double y = i + (si + 0.5) * inv_ss;
          const double x = j + (sj + 0.5) * inv_ss;
          const double v = (1.0 - 2.0 * y / resolution) * half;
          const double u = (2.0 * x / resolution - 1.0) * half;
          const Eigen::Vector3d dir = (forward + u * right + v * up).normalized();
          const Hit hit = intersect(scene, cam.position, dir);
          if (!hit.valid) continue;  // black background
          const Eigen::Vector3d p = cam.position + hit.t * dir;
          const double local_x = std::clamp(p.x() / scene.scale.x(), -1.0, 1.0);
          const Eigen::Vector3d albedo =
              hsv_to_rgb(scene.hue + scene.hue_gradient * 0.5 * local_x, 0.75, 1.0);
          // Headlight Lambertian: lit along the viewing ray, so mirror-
          // symmetric scenes produce mirror-symmetric images.
          const double lambert = std::max(0.0, hit.normal.dot(-dir));
          acc += albedo * (options.ambient + (1.0 - options.ambient) * lambert);
        }
      acc /= static_cast<double>(ss * ss);
      for (int c = 0; c < 3; ++c)
        img.at(c, i, j) = static_cast<float>(2.0 * std::clamp(acc[c], 0.0, 1.0) - 1.0);
    }
  }
  return img;
}

SceneParams random_scene(RngStream& rng, const SyntheticOptions& options) {
  SceneParams s;
  s.kind = static_cast<int>(rng.uniform_index(SceneParams::kNumKinds));
  s.hue = rng.uniform01();
  s.hue_gradient = options.hue_gradient;
  const double size = rng.uniform(options.min_size, options.max_size);
  const double elongation = rng.uniform(1.0, options.max_elongation);
  s.scale = Eigen::Vector3d(size * elongation, size, size * rng.uniform(0.8, 1.25));
  return s;
}

}  // namespace nerfgan
