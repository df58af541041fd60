// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "nerfgan/dataset.hpp"
#include "nerfgan/inference.hpp"
#include "nerfgan/metrics.hpp"

namespace nerfgan {

enum class EvalMode { kConditional, kUnconditional };

struct MetricEntry {
  std::string name;
  double value = 0;
  int n_real = 0;
  int n_gen = 0;
  std::string extractor;
  std::uint64_t seed = 0;
  bool warning = false;
};

struct EvaluateOptions {
  EvalMode mode = EvalMode::kConditional;
  int n_samples = 128;
  std::uint64_t seed = 1234;
  std::uint64_t extractor_seed = 4242;
  int classifier_steps = 150;
  std::optional<int> resolution;
};

/// Generative and reconstruction metrics of a trained model against a real
/// set. Unconditional mode renders G(z_rand, d_rand); conditional mode
/// renders G(E(I_real).z, d_rand) and additionally scores the
/// reconstructions G(E(I).z, E(I).d) with PSNR/SSIM. The inception-style
/// score uses the shape classifier fixture and needs dataset ground truth;
/// it is skipped (with a warning entry) for unlabeled folders.
template <class Real>
std::vector<MetricEntry> evaluate(Trainer<Real>& model, const Dataset& dataset,
                                  const EvaluateOptions& opt) {
  if (dataset.size() < 2) throw EvalError("evaluate: dataset needs at least 2 images");
  if (opt.n_samples < 2) throw EvalError("evaluate: n_samples must be >= 2");
  RngStream rng(opt.seed);
  const int resolution = opt.resolution.value_or(dataset.images()[0].height);
  const int n = std::min<int>(opt.n_samples, static_cast<int>(dataset.size()));

  // Distinct real indices (partial Fisher-Yates).
  std::vector<int> indices(dataset.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  for (int i = 0; i < n; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_index(indices.size() - static_cast<std::size_t>(i)));
    std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
  }
  std::vector<ImageTensor> reals;
  reals.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    reals.push_back(dataset.images()[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])]);

  RenderConfig rc = model.render_config_at(model.state().iteration, /*stratified=*/false);
  rc.height = rc.width = resolution;

  const int zd = model.config().generator.z_dim;
  std::vector<ImageTensor> fakes;
  fakes.reserve(static_cast<std::size_t>(n));
  std::vector<double> recon_psnr, recon_ssim;
  for (int i = 0; i < n; ++i) {
    Tensor<Real> z({1, zd});
    Pose render_pose = sample_pose(model.config().prior, rng);
    if (opt.mode == EvalMode::kUnconditional) {
      const auto zv = sample_latent(rng, zd);
      for (int c = 0; c < zd; ++c) z.data[c] = static_cast<Real>(zv[static_cast<std::size_t>(c)]);
      const std::vector<Pose> poses = {render_pose};
      fakes.push_back(tensor_to_image(model.render_images(z, poses, rc, rng).template cast<double>(), 0));
    } else {
      const ImageTensor& real = reals[static_cast<std::size_t>(i)];
      const EncodedImage<Real> enc = encode_image(model, real);
      const std::vector<Pose> poses = {render_pose};
      fakes.push_back(
          tensor_to_image(model.render_images(enc.z, poses, rc, rng).template cast<double>(), 0));
      const ImageTensor recon = render_view(model, enc.z, enc.pose, rc);
      recon_psnr.push_back(psnr(recon, real));
      recon_ssim.push_back(ssim_metric(recon, real));
    }
  }

  const EvalFeatureExtractor extractor(opt.extractor_seed);
  const Eigen::MatrixXd real_feats = extractor.extract(reals);
  const Eigen::MatrixXd fake_feats = extractor.extract(fakes);

  std::vector<MetricEntry> report;
  auto add = [&](const std::string& name, double value, bool warning = false) {
    MetricEntry e;
    e.name = name;
    e.value = value;
    e.n_real = n;
    e.n_gen = n;
    e.extractor = extractor.tag();
    e.seed = opt.seed;
    e.warning = warning;
    report.push_back(std::move(e));
  };

  bool fid_warning = false;
  add("fid", fid(real_feats, fake_feats, &fid_warning), fid_warning);
  add("kid_x100", 100.0 * kid(real_feats, fake_feats));

  if (const HiddenGroundTruth* gt = dataset.ground_truth()) {
    std::vector<int> labels(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
      labels[i] = gt->scenes[static_cast<std::size_t>(gt->scene_index[i])].kind;
    ShapeClassifier classifier(SceneParams::kNumKinds, opt.seed ^ 0xf1c5ULL);
    classifier.fit(dataset.images(), labels, opt.classifier_steps);
    add("is", inception_score(classifier.class_probs(fakes)));
  } else {
    add("is", 0.0, /*warning=*/true);  // no labels: fixture cannot be trained
  }

  if (opt.mode == EvalMode::kConditional) {
    double mp = 0, ms = 0;
    for (std::size_t i = 0; i < recon_psnr.size(); ++i) {
      mp += recon_psnr[i];
      ms += recon_ssim[i];
    }
    add("psnr", mp / static_cast<double>(recon_psnr.size()));
    add("ssim", ms / static_cast<double>(recon_ssim.size()));
  }
  return report;
}

}  // namespace nerfgan
