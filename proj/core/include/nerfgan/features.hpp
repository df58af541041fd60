// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "nerfgan/adam.hpp"
#include "nerfgan/image.hpp"
#include "nerfgan/synthetic.hpp"
#include "nerfgan/tape_conv.hpp"

namespace nerfgan {

/// Fixed random convolutional feature map for the generative metrics:
/// three strided conv blocks ending in 64 channels, global mean pooling to
/// a 64-d descriptor. Frozen and seeded; the tag travels with every metric
/// report so these numbers are never confused with values from pretrained
/// classification networks.
class EvalFeatureExtractor {
 public:
  explicit EvalFeatureExtractor(std::uint64_t seed);

  std::string tag() const { return "evalconv64/seed=" + std::to_string(seed_); }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return 64; }

  Eigen::MatrixXd extract(const std::vector<ImageTensor>& images) const;

 private:
  std::uint64_t seed_;
  std::vector<Tensor<double>> weights_;
  std::vector<Tensor<double>> biases_;
};

/// Shape-kind classifier fixture for the inception-style score. Trained
/// once per evaluation run on the synthetic dataset's hidden labels; it is
/// measurement apparatus, not part of the model under test.
class ShapeClassifier {
 public:
  ShapeClassifier(int num_classes, std::uint64_t seed);

  /// Minibatch softmax cross-entropy training.
  void fit(const std::vector<ImageTensor>& images, const std::vector<int>& labels, int steps,
           int batch_size = 16, double lr = 2e-3);

  /// Rows are probability vectors (softmax outputs).
  Eigen::MatrixXd class_probs(const std::vector<ImageTensor>& images) const;

  double accuracy(const std::vector<ImageTensor>& images, const std::vector<int>& labels) const;
  int num_classes() const { return num_classes_; }

 private:
  Tape<double>::Var logits(Tape<double>& tape, ParamLeaves<double>& leaves, Tape<double>::Var x,
                           bool train) const;

  int num_classes_;
  std::uint64_t seed_;
  ParameterStore<double> params_;
  AdamState<double> adam_;
};

/// Batch of [-1,1] images to a [B,3,H,W] tensor.
Tensor<double> images_to_tensor(const std::vector<ImageTensor>& images);
ImageTensor tensor_to_image(const Tensor<double>& batch, int index);

}  // namespace nerfgan
