// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nerfgan/tape_conv.hpp"

namespace nerfgan {

/// Fixed multi-layer convolutional feature map for the perceptual distance.
/// Weights are drawn once from a seed and never trained; the tag (recorded
/// in checkpoints and reports) identifies the extractor so distances are
/// never mistaken for values from a pretrained classification network.
template <class Real>
class PerceptualExtractor {
 public:
  explicit PerceptualExtractor(std::uint64_t seed) : seed_(seed) {
    const int chans[kLayers + 1] = {3, 8, 16, 32};
    RngStream rng(seed);
    for (int l = 0; l < kLayers; ++l) {
      const int fan_in = chans[l] * 9;
      const double bound = std::sqrt(2.0) * std::sqrt(3.0 / fan_in);
      weights_[l] = Tensor<Real>({chans[l + 1], fan_in});
      for (std::int64_t i = 0; i < weights_[l].numel(); ++i)
        weights_[l].data[i] = static_cast<Real>(rng.uniform(-bound, bound));
      biases_[l] = Tensor<Real>({chans[l + 1]});
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::string tag() const { return "randconv3/seed=" + std::to_string(seed_); }

  std::vector<typename Tape<Real>::Var> features(Tape<Real>& tape,
                                                 typename Tape<Real>::Var images) const {
    std::vector<typename Tape<Real>::Var> out;
    typename Tape<Real>::Var x = images;
    for (int l = 0; l < kLayers; ++l) {
      auto w = tape.constant(weights_[l]);
      auto b = tape.constant(biases_[l]);
      x = tape.leaky_relu(conv2d(tape, x, w, b, 3, 3, l == 0 ? 1 : 2, 1), Real(0.2));
      out.push_back(x);
    }
    return out;
  }

  /// Sum over layers of mean squared feature difference; zero iff all
  /// feature maps agree.
  typename Tape<Real>::Var distance(Tape<Real>& tape, typename Tape<Real>::Var a,
                                    typename Tape<Real>::Var b) const {
    auto fa = features(tape, a);
    auto fb = features(tape, b);
    typename Tape<Real>::Var total = tape.constant_scalar(Real(0));
    for (std::size_t l = 0; l < fa.size(); ++l)
      total = tape.add(total, tape.mse(fa[l], fb[l]));
    return total;
  }

 private:
  static constexpr int kLayers = 3;
  std::uint64_t seed_;
  Tensor<Real> weights_[kLayers];
  Tensor<Real> biases_[kLayers];
};

}  // namespace nerfgan
