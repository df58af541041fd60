// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nerfgan/geometry.hpp"
#include "nerfgan/image.hpp"
#include "nerfgan/rng.hpp"
#include "nerfgan/synthetic.hpp"

namespace nerfgan {

/// Per-image ground truth of a synthetic dataset. Withheld from training:
/// the trainer's interface takes plain image vectors, so this never reaches
/// the optimization path.
struct HiddenGroundTruth {
  std::vector<int> scene_index;  // one per image
  std::vector<Pose> poses;       // one per image
  std::vector<SceneParams> scenes;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<ImageTensor> images, std::optional<HiddenGroundTruth> gt)
      : images_(std::move(images)), gt_(std::move(gt)) {}

  const std::vector<ImageTensor>& images() const { return images_; }
  std::size_t size() const { return images_.size(); }

  /// Evaluation-only; nullptr for datasets without a sidecar.
  const HiddenGroundTruth* ground_truth() const { return gt_ ? &*gt_ : nullptr; }

 private:
  std::vector<ImageTensor> images_;
  std::optional<HiddenGroundTruth> gt_;
};

/// Procedural dataset: n_scenes objects, views_per_scene poses each, drawn
/// from the pose prior and rendered by the analytic rasterizer. The ground
/// truth (poses, scene parameters) is retained for evaluation harnesses only.
Dataset make_synthetic_dataset(int n_scenes, int views_per_scene, const PosePrior& prior,
                               int resolution, std::uint64_t seed,
                               const SyntheticOptions& options = {});

/// Write images as 8-bit PNGs plus the ground-truth sidecar.
void save_dataset(const Dataset& dataset, const std::string& dir);

/// Load a folder of PNGs (sorted by filename). Undecodable files are
/// skipped with a warning on stderr; an empty result is an error. When a
/// ground-truth sidecar is present it is attached for evaluation use.
Dataset load_image_folder(const std::string& dir, bool center_crop, int resolution);

/// i.i.d. uniform [-1, 1] latent vector.
std::vector<double> sample_latent(RngStream& rng, int dim);

}  // namespace nerfgan
