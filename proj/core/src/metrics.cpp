// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "nerfgan/geometry.hpp"
#include "nerfgan/ssim.hpp"

namespace nerfgan {

double psnr(const std::vector<double>& a, const std::vector<double>& b, double max_value) {
  if (a.size() != b.size() || a.empty()) throw EvalError("psnr: shape mismatch");
  if (!(max_value > 0)) throw EvalError("psnr: max_value must be positive");
  double mse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(max_value * max_value / mse));
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  if (a.numel() != b.numel()) throw EvalError("psnr: shape mismatch");
  std::vector<double> ua(a.numel()), ub(b.numel());
  for (std::size_t i = 0; i < a.numel(); ++i) {
    ua[i] = (a.chw[i] + 1.0) / 2.0;
    ub[i] = (b.chw[i] + 1.0) / 2.0;
  }
  return psnr(ua, ub, 1.0);
}

namespace {

Eigen::VectorXd mean_of(const Eigen::MatrixXd& x) { return x.colwise().mean().transpose(); }

Eigen::MatrixXd covariance_of(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
  return centered.transpose() * centered / denom;
}

// Symmetric PSD square root with eigenvalue clamping.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m, double* clamped_mass) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  if (clamped_mass) {
    *clamped_mass = 0;
    for (int i = 0; i < ev.size(); ++i)
      if (ev[i] < 0) *clamped_mass += -ev[i];
  }
  const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool* conditioning_warning) {
  if (a.cols() != b.cols()) throw EvalError("fid: feature dimension mismatch");
  if (a.rows() < 2 || b.rows() < 2) throw EvalError("fid: need at least 2 samples per set");
  if (!a.allFinite() || !b.allFinite()) throw EvalError("fid: non-finite features");

  const Eigen::VectorXd mu_a = mean_of(a), mu_b = mean_of(b);
  const Eigen::MatrixXd sa = covariance_of(a), sb = covariance_of(b);

  double clamp_a = 0, clamp_cross = 0;
  const Eigen::MatrixXd root_a = sqrtm_psd(sa, &clamp_a);
  // Tr((Sa Sb)^{1/2}) = sum of sqrt eigenvalues of the symmetric product
  // sqrt(Sa) Sb sqrt(Sa).
  const Eigen::MatrixXd sym = root_a * sb * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  double trace_root = 0, clamped = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()[i];
    if (ev > 0) trace_root += std::sqrt(ev);
    else clamped += -ev;
  }
  clamp_cross = clamped;
  if (conditioning_warning) {
    const double scale = std::max(1e-30, sym.diagonal().cwiseAbs().maxCoeff());
    *conditioning_warning = (clamp_a > 1e-6 || clamp_cross / scale > 1e-6);
  }
  const double value =
      (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * trace_root;
  // Fréchet distances are nonnegative; tiny negatives are numerical noise.
  return std::max(0.0, value);
}

double kid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw EvalError("kid: feature dimension mismatch");
  const auto m = a.rows(), n = b.rows();
  if (m < 2 || n < 2) throw EvalError("kid: need at least 2 samples per set");
  const double d = static_cast<double>(a.cols());
  auto kernel = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (((x * y.transpose()).array() / d) + 1.0).cube();
  };
  const Eigen::ArrayXXd kaa = kernel(a, a);
  const Eigen::ArrayXXd kbb = kernel(b, b);
  const Eigen::ArrayXXd kab = kernel(a, b);
  const double sum_aa = kaa.sum() - kaa.matrix().trace();
  const double sum_bb = kbb.sum() - kbb.matrix().trace();
  const double sum_ab = kab.sum();
  return sum_aa / (static_cast<double>(m) * (m - 1)) + sum_bb / (static_cast<double>(n) * (n - 1)) -
         2.0 * sum_ab / (static_cast<double>(m) * n);
}

double inception_score(const Eigen::MatrixXd& probs) {
  const auto n = probs.rows(), c = probs.cols();
  if (n < 1 || c < 1) throw EvalError("inception_score: empty input");
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0;
    for (Eigen::Index j = 0; j < c; ++j) {
      const double p = probs(i, j);
      if (!(p >= 0) || !std::isfinite(p)) throw EvalError("inception_score: invalid probability");
      row_sum += p;
    }
    if (std::abs(row_sum - 1.0) > 1e-6)
      throw EvalError("inception_score: row " + std::to_string(i) + " sums to " +
                      std::to_string(row_sum));
  }
  const Eigen::VectorXd marginal = probs.colwise().mean().transpose();
  double mean_kl = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double kl = 0;
    for (Eigen::Index j = 0; j < c; ++j) {
      const double p = probs(i, j);
      if (p > 0) kl += p * (std::log(p) - std::log(marginal[j]));
    }
    mean_kl += kl;
  }
  return std::exp(mean_kl / static_cast<double>(n));
}

double ssim_metric(const ImageTensor& a, const ImageTensor& b) {
  if (a.height != b.height || a.width != b.width) throw EvalError("ssim: shape mismatch");
  Tape<double> tape;
  Tensor<double> ta({1, 3, a.height, a.width}), tb({1, 3, b.height, b.width});
  for (std::size_t i = 0; i < a.chw.size(); ++i) {
    ta.data[static_cast<std::int64_t>(i)] = a.chw[i];
    tb.data[static_cast<std::int64_t>(i)] = b.chw[i];
  }
  return tape.val(ssim(tape, tape.constant(ta), tape.constant(tb))).data[0];
}

double circular_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw EvalError("circular_correlation: size mismatch");
  auto circular_mean = [](const std::vector<double>& x) {
    double s = 0, c = 0;
    for (double v : x) {
      s += std::sin(v);
      c += std::cos(v);
    }
    return std::atan2(s, c);
  };
  const double ma = circular_mean(a), mb = circular_mean(b);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double sa = std::sin(a[i] - ma), sb = std::sin(b[i] - mb);
    num += sa * sb;
    da += sa * sa;
    db += sb * sb;
  }
  const double denom = std::sqrt(da * db);
  if (denom == 0) return 0.0;
  return num / denom;
}

}  // namespace nerfgan
