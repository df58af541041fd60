// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "nerfgan/dataset.hpp"
#include "nerfgan/features.hpp"
#include "nerfgan/metrics.hpp"
#include "nerfgan/rng.hpp"

using namespace nerfgan;

TEST_CASE("psnr: caps, zero dB, arithmetic") {
  std::vector<double> a = {0.1, 0.5, 0.9, 0.3};
  CHECK(psnr(a, a, 1.0) == 100.0);

  // MSE = 1 at max 1 -> 0 dB.
  std::vector<double> zeros(16, 0.0), ones(16, 1.0);
  CHECK(psnr(zeros, ones, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

  // constant 0.5 vs 0.0 at max 1 -> 10*log10(1/0.25) ~ 6.0206.
  std::vector<double> halves(16, 0.5);
  CHECK(psnr(halves, zeros, 1.0) == doctest::Approx(6.020599913279624).epsilon(1e-12));

  std::vector<double> wrong(5, 0.0);
  CHECK_THROWS_AS(psnr(a, wrong, 1.0), EvalError);
}

TEST_CASE("fid: identity, 1-d closed form, symmetry, rotation invariance") {
  RngStream rng(21);
  Eigen::MatrixXd x(64, 5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  CHECK(fid(x, x) < 1e-6);

  // Equal-variance 1-d sets with means differing by m give exactly m^2.
  Eigen::MatrixXd a(32, 1), b(32, 1);
  for (int i = 0; i < 32; ++i) {
    const double v = rng.normal();
    a(i, 0) = v;
    b(i, 0) = v + 1.7;  // identical spread, shifted mean
  }
  CHECK(fid(a, b) == doctest::Approx(1.7 * 1.7).epsilon(1e-9));

  Eigen::MatrixXd y(48, 5);
  for (int i = 0; i < y.size(); ++i) y.data()[i] = 0.4 * rng.normal() + 0.2;
  CHECK(fid(x, y) == doctest::Approx(fid(y, x)).epsilon(1e-8));

  // Shared orthogonal rotation leaves the distance unchanged.
  Eigen::MatrixXd m(5, 5);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  CHECK(fid(x * q, y * q) == doctest::Approx(fid(x, y)).epsilon(1e-6));

  CHECK_THROWS_AS(fid(Eigen::MatrixXd(1, 3), Eigen::MatrixXd(4, 3)), EvalError);
}

TEST_CASE("fid: matches the analytic moment-plug-in oracle on 3-d gaussians") {
  // Oracle route: compute means/covariances independently and evaluate the
  // closed-form Fréchet distance by eigendecomposition of Sb^{1/2} Sa Sb^{1/2}
  // (note: the implementation symmetrizes the other way round).
  RngStream rng(33);
  const int n = 4000, d = 3;
  const Eigen::Vector3d mu_a(0.3, -0.2, 0.5), mu_b(-0.1, 0.4, 0.2);
  Eigen::Matrix3d la = Eigen::Matrix3d::Zero(), lb = Eigen::Matrix3d::Zero();
  la << 0.8, 0, 0, 0.2, 0.6, 0, -0.1, 0.3, 0.5;
  lb << 0.5, 0, 0, -0.3, 0.9, 0, 0.2, 0.1, 0.4;
  Eigen::MatrixXd a(n, d), b(n, d);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d ga(rng.normal(), rng.normal(), rng.normal());
    Eigen::Vector3d gb(rng.normal(), rng.normal(), rng.normal());
    a.row(i) = (mu_a + la * ga).transpose();
    b.row(i) = (mu_b + lb * gb).transpose();
  }

  auto cov_oracle = [](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    const Eigen::VectorXd mean = x.colwise().mean().transpose();
    for (int i = 0; i < x.rows(); ++i) {
      const Eigen::VectorXd d0 = x.row(i).transpose() - mean;
      c += d0 * d0.transpose();
    }
    return c / (x.rows() - 1);
  };
  auto sqrt_oracle = [](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
  };
  const Eigen::MatrixXd sa = cov_oracle(a), sb = cov_oracle(b);
  const Eigen::MatrixXd root_b = sqrt_oracle(sb);
  const Eigen::MatrixXd sym = root_b * sa * root_b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  double trace_root = 0;
  for (int i = 0; i < 3; ++i) trace_root += std::sqrt(std::max(0.0, es.eigenvalues()[i]));
  const Eigen::VectorXd dmu =
      a.colwise().mean().transpose() - b.colwise().mean().transpose();
  const double oracle = dmu.squaredNorm() + sa.trace() + sb.trace() - 2 * trace_root;

  CHECK(fid(a, b) == doctest::Approx(oracle).epsilon(1e-8));

  // And both estimates sit near the true analytic distance at this n.
  const Eigen::Matrix3d true_sa = la * la.transpose(), true_sb = lb * lb.transpose();
  const Eigen::MatrixXd true_root = sqrt_oracle(true_sb);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(true_root * true_sa * true_root);
  double true_trace = 0;
  for (int i = 0; i < 3; ++i) true_trace += std::sqrt(std::max(0.0, es2.eigenvalues()[i]));
  const double truth =
      (mu_a - mu_b).squaredNorm() + true_sa.trace() + true_sb.trace() - 2 * true_trace;
  CHECK(std::abs(fid(a, b) - truth) < 0.1);
}

namespace {

double kid_bruteforce(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto m = a.rows(), n = b.rows();
  const double d = static_cast<double>(a.cols());
  auto k = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return std::pow(x.dot(y) / d + 1.0, 3.0);
  };
  double saa = 0, sbb = 0, sab = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) saa += k(a.row(i).transpose(), a.row(j).transpose());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) sbb += k(b.row(i).transpose(), b.row(j).transpose());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) sab += k(a.row(i).transpose(), b.row(j).transpose());
  return saa / (static_cast<double>(m) * (m - 1)) + sbb / (static_cast<double>(n) * (n - 1)) -
         2 * sab / (static_cast<double>(m) * n);
}

}  // namespace

TEST_CASE("kid: brute-force oracle on tiny sets, null behavior, scaling") {
  RngStream rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_index(7));
    const int n = 2 + static_cast<int>(rng.uniform_index(7));
    const int d = 1 + static_cast<int>(rng.uniform_index(4));
    Eigen::MatrixXd a(m, d), b(n, d);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-2, 2);
    for (int i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-2, 2);
    CHECK(kid(a, b) == doctest::Approx(kid_bruteforce(a, b)).epsilon(1e-12));
  }

  // Disjoint halves of one distribution: near zero against bootstrap noise.
  const int big = 256, d = 6;
  Eigen::MatrixXd pool(2 * big, d);
  for (int i = 0; i < pool.size(); ++i) pool.data()[i] = rng.normal();
  const double null_value = kid(pool.topRows(big), pool.bottomRows(big));
  // Bootstrap stderr of the estimator under the null.
  std::vector<double> boot;
  for (int rep = 0; rep < 24; ++rep) {
    Eigen::MatrixXd ra(big, d), rb(big, d);
    for (int i = 0; i < big; ++i) {
      ra.row(i) = pool.row(static_cast<Eigen::Index>(rng.uniform_index(2 * big)));
      rb.row(i) = pool.row(static_cast<Eigen::Index>(rng.uniform_index(2 * big)));
    }
    boot.push_back(kid(ra, rb));
  }
  double mean = 0;
  for (double v : boot) mean += v;
  mean /= static_cast<double>(boot.size());
  double var = 0;
  for (double v : boot) var += (v - mean) * (v - mean);
  const double stderr_boot = std::sqrt(var / (boot.size() - 1));
  CHECK(std::abs(null_value) < 3 * stderr_boot + 1e-9);

  CHECK_THROWS_AS(kid(Eigen::MatrixXd(1, 2), Eigen::MatrixXd(3, 2)), EvalError);
}

TEST_CASE("inception score: closed forms and direct-summation oracle") {
  // Uniform rows -> exactly 1.
  Eigen::MatrixXd uniform(7, 4);
  uniform.setConstant(0.25);
  CHECK(inception_score(uniform) == doctest::Approx(1.0).epsilon(1e-12));

  // Diagonal one-hot rows -> exactly C.
  const int c = 5;
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Identity(c, c);
  CHECK(inception_score(onehot) == doctest::Approx(static_cast<double>(c)).epsilon(1e-12));

  // Random rows vs a direct double-loop oracle.
  RngStream rng(51);
  Eigen::MatrixXd probs(9, 6);
  for (int i = 0; i < probs.rows(); ++i) {
    double total = 0;
    for (int j = 0; j < probs.cols(); ++j) {
      probs(i, j) = -std::log(rng.uniform01() + 1e-12);
      total += probs(i, j);
    }
    probs.row(i) /= total;
  }
  Eigen::VectorXd marginal = probs.colwise().mean().transpose();
  double mean_kl = 0;
  for (int i = 0; i < probs.rows(); ++i)
    for (int j = 0; j < probs.cols(); ++j)
      if (probs(i, j) > 0) mean_kl += probs(i, j) * std::log(probs(i, j) / marginal[j]) / probs.rows();
  CHECK(inception_score(probs) == doctest::Approx(std::exp(mean_kl)).epsilon(1e-10));

  // IS is always within [1, C].
  CHECK(inception_score(probs) >= 1.0);
  CHECK(inception_score(probs) <= static_cast<double>(probs.cols()));

  Eigen::MatrixXd bad(2, 3);
  bad << 0.5, 0.5, 0.5, 0.2, 0.3, 0.5;
  CHECK_THROWS_AS(inception_score(bad), EvalError);
}

TEST_CASE("circular correlation: invariances") {
  RngStream rng(61);
  std::vector<double> a(200), shifted(200), flipped(200), noise(200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(0, 2 * kPi);
    shifted[i] = std::fmod(a[i] + 1.0, 2 * kPi);
    flipped[i] = std::fmod(5.0 - a[i] + 4 * kPi, 2 * kPi);
    noise[i] = rng.uniform(0, 2 * kPi);
  }
  CHECK(circular_correlation(a, a) == doctest::Approx(1.0));
  CHECK(circular_correlation(a, shifted) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(circular_correlation(a, flipped) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(circular_correlation(a, noise)) < 0.2);
}

TEST_CASE("eval feature extractor: deterministic, tagged, sane shapes") {
  const EvalFeatureExtractor fx(777);
  CHECK(fx.tag() == "evalconv64/seed=777");
  RngStream rng(71);
  std::vector<ImageTensor> images;
  for (int i = 0; i < 5; ++i) {
    ImageTensor img(16, 16);
    for (auto& v : img.chw) v = static_cast<float>(rng.uniform(-1, 1));
    images.push_back(std::move(img));
  }
  const Eigen::MatrixXd f1 = fx.extract(images);
  const Eigen::MatrixXd f2 = fx.extract(images);
  CHECK(f1.rows() == 5);
  CHECK(f1.cols() == 64);
  CHECK((f1 - f2).cwiseAbs().maxCoeff() == 0.0);

  const EvalFeatureExtractor other(778);
  CHECK((other.extract(images) - f1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("shape classifier fixture learns the synthetic labels") {
  const PosePrior prior = PosePrior::gaussian(Pose{1.3, kPi}, 0.1, 0.4);
  const Dataset d = make_synthetic_dataset(60, 1, prior, 16, 12345);
  const auto* gt = d.ground_truth();
  REQUIRE(gt != nullptr);
  std::vector<int> labels(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    labels[i] = gt->scenes[static_cast<std::size_t>(gt->scene_index[i])].kind;

  ShapeClassifier cls(SceneParams::kNumKinds, 99);
  cls.fit(d.images(), labels, 120);
  // Better than chance on its own training set is all the fixture needs.
  CHECK(cls.accuracy(d.images(), labels) > 0.5);

  const Eigen::MatrixXd probs = cls.class_probs(d.images());
  for (int i = 0; i < probs.rows(); ++i)
    CHECK(probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}
