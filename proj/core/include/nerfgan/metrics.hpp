// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "nerfgan/image.hpp"

namespace nerfgan {

/// Peak signal-to-noise ratio in dB: 10*log10(max^2 / MSE), capped at
/// 100 dB (the documented value for an exact match).
double psnr(const std::vector<double>& a, const std::vector<double>& b, double max_value);

/// PSNR of two [-1,1] images evaluated on the [0,1] remap with max = 1.
double psnr(const ImageTensor& a, const ImageTensor& b);

/// Frechet distance between Gaussian fits of two feature sets (rows =
/// samples): ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}), with the
/// matrix square root taken by symmetric eigendecomposition of
/// sqrt(Sa) Sb sqrt(Sa) and negative eigenvalues clamped to zero.
/// `conditioning_warning`, when given, is set if clamping was material.
double fid(const Eigen::MatrixXd& features_a, const Eigen::MatrixXd& features_b,
           bool* conditioning_warning = nullptr);

/// Unbiased squared MMD with the polynomial kernel k(x,y) = (x.y/D + 1)^3,
/// within-set diagonals excluded. Raw estimator; reports scale it by 100.
double kid(const Eigen::MatrixXd& features_a, const Eigen::MatrixXd& features_b);

/// exp(mean_i KL(p(y|x_i) || mean_j p(y|x_j))); rows must be probability
/// vectors. Always in [1, C].
double inception_score(const Eigen::MatrixXd& class_probs);

/// Mean SSIM between two [-1,1] images (Gaussian window 11, sigma 1.5).
double ssim_metric(const ImageTensor& a, const ImageTensor& b);

/// Fisher-Lee circular correlation between two angle samples; invariant to
/// global offsets, sign flips only flip its sign.
double circular_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace nerfgan
