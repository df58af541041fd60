// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace nerfgan {

namespace fs = std::filesystem;

Dataset make_synthetic_dataset(int n_scenes, int views_per_scene, const PosePrior& prior,
                               int resolution, std::uint64_t seed,
                               const SyntheticOptions& options) {
  if (n_scenes < 1 || views_per_scene < 1)
    throw ConfigError("make_synthetic_dataset: counts must be >= 1");
  if (resolution < 1) throw ConfigError("make_synthetic_dataset: resolution must be >= 1");

  HiddenGroundTruth gt;
  std::vector<ImageTensor> images;
  images.reserve(static_cast<std::size_t>(n_scenes) * views_per_scene);
  const RngStream root(seed);
  for (int s = 0; s < n_scenes; ++s) {
    RngStream scene_rng = root.derive(static_cast<std::uint64_t>(s) * 2 + 1);
    gt.scenes.push_back(random_scene(scene_rng, options));
    for (int v = 0; v < views_per_scene; ++v) {
      const Pose pose = sample_pose(prior, scene_rng);
      images.push_back(rasterize_scene(gt.scenes.back(), pose, resolution, options));
      gt.scene_index.push_back(s);
      gt.poses.push_back(pose);
    }
  }
  return Dataset(std::move(images), std::move(gt));
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%05zu.png", i);
    write_png((fs::path(dir) / name).string(), dataset.images()[i]);
  }
  const HiddenGroundTruth* gt = dataset.ground_truth();
  if (!gt) return;
  std::ofstream out(fs::path(dir) / "ground_truth.txt");
  out.precision(17);
  out << "nerfgan-ground-truth v1\n";
  out << "images " << dataset.size() << " scenes " << gt->scenes.size() << "\n";
  for (std::size_t s = 0; s < gt->scenes.size(); ++s) {
    const SceneParams& sc = gt->scenes[s];
    out << "scene " << s << " kind " << sc.kind << " hue " << sc.hue << " hue_gradient "
        << sc.hue_gradient << " scale " << sc.scale.x() << " " << sc.scale.y() << " "
        << sc.scale.z() << "\n";
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%05zu.png", i);
    out << "image " << i << " file " << name << " scene " << gt->scene_index[i] << " pitch "
        << gt->poses[i].pitch << " yaw " << gt->poses[i].yaw << "\n";
  }
}

namespace {

std::optional<HiddenGroundTruth> load_ground_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string header;
  std::getline(in, header);
  if (header != "nerfgan-ground-truth v1") {
    std::cerr << "warning: unrecognized ground-truth header in " << path << ", ignoring\n";
    return std::nullopt;
  }
  HiddenGroundTruth gt;
  std::string word;
  std::size_t n_images = 0, n_scenes = 0;
  in >> word >> n_images >> word >> n_scenes;
  gt.scenes.resize(n_scenes);
  gt.scene_index.resize(n_images);
  gt.poses.resize(n_images);
  std::string kind;
  while (in >> kind) {
    if (kind == "scene") {
      std::size_t idx;
      SceneParams sc;
      in >> idx;
      in >> word >> sc.kind >> word >> sc.hue >> word >> sc.hue_gradient >> word >> sc.scale.x() >>
          sc.scale.y() >> sc.scale.z();
      if (idx >= n_scenes) throw std::runtime_error("ground truth: scene index out of range");
      gt.scenes[idx] = sc;
    } else if (kind == "image") {
      std::size_t idx;
      std::string file;
      int scene;
      Pose pose;
      in >> idx >> word >> file >> word >> scene >> word >> pose.pitch >> word >> pose.yaw;
      if (idx >= n_images) throw std::runtime_error("ground truth: image index out of range");
      gt.scene_index[idx] = scene;
      gt.poses[idx] = pose;
    } else {
      throw std::runtime_error("ground truth: unexpected record '" + kind + "'");
    }
  }
  return gt;
}

}  // namespace

Dataset load_image_folder(const std::string& dir, bool center_crop, int resolution) {
  if (!fs::is_directory(dir)) throw std::runtime_error("load_image_folder: not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<ImageTensor> images;
  for (const auto& f : files) {
    try {
      ImageTensor img = read_png(f.string());
      if (center_crop || img.height != resolution || img.width != resolution)
        img = center_crop_resize(img, resolution);
      images.push_back(std::move(img));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << f << ": " << e.what() << "\n";
    }
  }
  if (images.empty()) throw std::runtime_error("load_image_folder: no decodable images in " + dir);

  auto gt = load_ground_truth(fs::path(dir) / "ground_truth.txt");
  if (gt && gt->poses.size() != images.size()) {
    std::cerr << "warning: ground truth size mismatch in " << dir << ", ignoring sidecar\n";
    gt.reset();
  }
  return Dataset(std::move(images), std::move(gt));
}

std::vector<double> sample_latent(RngStream& rng, int dim) {
  if (dim < 1) throw ConfigError("sample_latent: dim must be >= 1");
  std::vector<double> z(static_cast<std::size_t>(dim));
  for (auto& v : z) v = rng.uniform(-1.0, 1.0);
  return z;
}

}  // namespace nerfgan
