// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/features.hpp"

#include <cmath>

#include "nerfgan/param_leaves.hpp"

namespace nerfgan {

Tensor<double> images_to_tensor(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw EvalError("images_to_tensor: empty batch");
  const int h = images[0].height, w = images[0].width;
  Tensor<double> out({static_cast<int>(images.size()), 3, h, w});
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b].height != h || images[b].width != w)
      throw EvalError("images_to_tensor: mixed resolutions in batch");
    for (std::size_t i = 0; i < images[b].chw.size(); ++i)
      out.data[static_cast<std::int64_t>(b) * images[b].chw.size() + i] = images[b].chw[i];
  }
  return out;
}

ImageTensor tensor_to_image(const Tensor<double>& batch, int index) {
  if (batch.ndim() != 4 || batch.dim(1) != 3) throw EvalError("tensor_to_image: expected [B,3,H,W]");
  ImageTensor img(batch.dim(2), batch.dim(3));
  const std::int64_t n = static_cast<std::int64_t>(img.chw.size());
  for (std::int64_t i = 0; i < n; ++i)
    img.chw[static_cast<std::size_t>(i)] = static_cast<float>(batch.data[index * n + i]);
  return img;
}

EvalFeatureExtractor::EvalFeatureExtractor(std::uint64_t seed) : seed_(seed) {
  const int chans[4] = {3, 16, 32, 64};
  RngStream rng(seed ^ 0x5eedf00dULL);
  for (int l = 0; l < 3; ++l) {
    const int fan_in = chans[l] * 9;
    const double bound = std::sqrt(2.0) * std::sqrt(3.0 / fan_in);
    Tensor<double> w({chans[l + 1], fan_in});
    for (std::int64_t i = 0; i < w.numel(); ++i) w.data[i] = rng.uniform(-bound, bound);
    weights_.push_back(std::move(w));
    biases_.push_back(Tensor<double>({chans[l + 1]}));
  }
}

Eigen::MatrixXd EvalFeatureExtractor::extract(const std::vector<ImageTensor>& images) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), 64);
  // Batch in slabs to bound the tape footprint.
  const std::size_t slab = 32;
  for (std::size_t start = 0; start < images.size(); start += slab) {
    const std::size_t end = std::min(images.size(), start + slab);
    std::vector<ImageTensor> part(images.begin() + static_cast<std::ptrdiff_t>(start),
                                  images.begin() + static_cast<std::ptrdiff_t>(end));
    Tape<double> tape;
    auto x = tape.constant(images_to_tensor(part));
    for (int l = 0; l < 3; ++l) {
      x = tape.leaky_relu(
          conv2d(tape, x, tape.constant(weights_[static_cast<std::size_t>(l)]),
                 tape.constant(biases_[static_cast<std::size_t>(l)]), 3, 3, 2, 1),
          0.2);
    }
    const Tensor<double>& v = tape.val(x);  // [b, 64, s, s]
    const int b = v.dim(0), c = v.dim(1);
    const std::int64_t spatial = static_cast<std::int64_t>(v.dim(2)) * v.dim(3);
    for (int i = 0; i < b; ++i)
      for (int ch = 0; ch < c; ++ch) {
        const std::int64_t off = (static_cast<std::int64_t>(i) * c + ch) * spatial;
        out(static_cast<Eigen::Index>(start) + i, ch) =
            v.data.segment(off, spatial).sum() / static_cast<double>(spatial);
      }
  }
  return out;
}

ShapeClassifier::ShapeClassifier(int num_classes, std::uint64_t seed)
    : num_classes_(num_classes), seed_(seed) {
  if (num_classes < 2) throw EvalError("ShapeClassifier: need at least 2 classes");
  const int chans[3] = {3, 8, 16};
  const RngStream root(seed ^ 0xc1a551f1e5ULL);
  for (int l = 0; l < 2; ++l) {
    const std::string w = "cls.conv" + std::to_string(l) + ".w";
    const std::string b = "cls.conv" + std::to_string(l) + ".b";
    params_.add(w, {chans[l + 1], chans[l] * 9});
    params_.add(b, {chans[l + 1]});
    init_uniform(params_.get(w), w, root, std::sqrt(2.0) * std::sqrt(3.0 / (chans[l] * 9)));
  }
  // Heads are sized lazily on first use because the flattened dim depends
  // on the input resolution; fit() must see data before class_probs().
}

Tape<double>::Var ShapeClassifier::logits(Tape<double>& tape, ParamLeaves<double>& leaves,
                                          Tape<double>::Var x, bool train) const {
  for (int l = 0; l < 2; ++l) {
    x = tape.leaky_relu(conv2d(tape, x, leaves.get("cls.conv" + std::to_string(l) + ".w", train),
                               leaves.get("cls.conv" + std::to_string(l) + ".b", train), 3, 3, 2, 1),
                        0.2);
  }
  const auto& shape = tape.val(x).shape;
  const int feat = shape[1] * shape[2] * shape[3];
  auto* self = const_cast<ShapeClassifier*>(this);
  if (!self->params_.contains("cls.head.w")) {
    self->params_.add("cls.head.w", {num_classes_, feat});
    self->params_.add("cls.head.b", {num_classes_});
    init_uniform(self->params_.get("cls.head.w"), "cls.head.w", RngStream(seed_),
                 1.0 / std::sqrt(static_cast<double>(feat)));
  }
  auto flat = tape.reshape(x, {shape[0], feat});
  return tape.linear(flat, leaves.get("cls.head.w", train), leaves.get("cls.head.b", train));
}

void ShapeClassifier::fit(const std::vector<ImageTensor>& images, const std::vector<int>& labels,
                          int steps, int batch_size, double lr) {
  if (images.size() != labels.size() || images.empty())
    throw EvalError("ShapeClassifier::fit: bad training data");
  RngStream rng(seed_);
  for (int step = 0; step < steps; ++step) {
    std::vector<ImageTensor> batch;
    Tensor<double> onehot({batch_size, num_classes_});
    for (int b = 0; b < batch_size; ++b) {
      const std::size_t idx = rng.uniform_index(images.size());
      batch.push_back(images[idx]);
      const int label = labels[idx];
      if (label < 0 || label >= num_classes_)
        throw EvalError("ShapeClassifier::fit: label out of range");
      onehot.mat(batch_size, num_classes_)(b, label) = 1.0;
    }
    Tape<double> tape;
    ParamLeaves<double> leaves(tape, params_);
    auto lg = logits(tape, leaves, tape.constant(images_to_tensor(batch)), true);
    // Softmax cross-entropy: mean(logsumexp(l) - l_y).
    auto expv = tape.exp_(lg);
    auto lse = tape.log_(tape.sum_rows(expv));
    auto picked = tape.sum_rows(tape.mul(lg, tape.constant(onehot)));
    auto loss = tape.mean_all(tape.sub(lse, picked));
    tape.backward(loss);
    adam_.step(params_, leaves, "cls.", lr, 0.9, 0.999, 1e-8);
  }
}

Eigen::MatrixXd ShapeClassifier::class_probs(const std::vector<ImageTensor>& images) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), num_classes_);
  const std::size_t slab = 32;
  for (std::size_t start = 0; start < images.size(); start += slab) {
    const std::size_t end = std::min(images.size(), start + slab);
    std::vector<ImageTensor> part(images.begin() + static_cast<std::ptrdiff_t>(start),
                                  images.begin() + static_cast<std::ptrdiff_t>(end));
    Tape<double> tape;
    ParamLeaves<double> leaves(tape, const_cast<ParameterStore<double>&>(params_));
    auto lg = logits(tape, leaves, tape.constant(images_to_tensor(part)), false);
    const auto& v = tape.val(lg);
    const int b = v.rows();
    for (int i = 0; i < b; ++i) {
      double max_logit = -1e300;
      for (int c = 0; c < num_classes_; ++c)
        max_logit = std::max(max_logit, v.mat(b, num_classes_)(i, c));
      double denom = 0;
      for (int c = 0; c < num_classes_; ++c)
        denom += std::exp(v.mat(b, num_classes_)(i, c) - max_logit);
      for (int c = 0; c < num_classes_; ++c)
        out(static_cast<Eigen::Index>(start) + i, c) =
            std::exp(v.mat(b, num_classes_)(i, c) - max_logit) / denom;
    }
  }
  return out;
}

double ShapeClassifier::accuracy(const std::vector<ImageTensor>& images,
                                 const std::vector<int>& labels) const {
  const Eigen::MatrixXd probs = class_probs(images);
  int correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best;
    probs.row(i).maxCoeff(&best);
    if (static_cast<int>(best) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

}  // namespace nerfgan
