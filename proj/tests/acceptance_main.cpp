// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion, exit nonzero when any
// fails. Tolerances and thresholds are fixed here; the training budget of
// the end-to-end run is the pinned default (flags below exist for manual
// exploration only and are not used by the registered test).
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "nerfgan/evaluate.hpp"
#include "nerfgan/inference.hpp"
#include "nerfgan/trainer.hpp"
#include "support/gradcheck.hpp"

using namespace nerfgan;
namespace fs = std::filesystem;
using nerfgan::testing::check_gradients;

namespace {

struct Criterion {
  int id;
  std::string detail;
  bool pass = false;
};

std::vector<Criterion> g_results;

void record(int id, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << detail << "\n"
            << std::flush;
  g_results.push_back({id, detail, pass});
}

// ---------------------------------------------------------------- 1
void criterion_1_rendering_oracle() {
  RngStream rng(1001);
  bool analytic_ok = true;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double sigma = rng.uniform(0.05, 12.0);
    const Eigen::Vector3d c(rng.uniform01(), rng.uniform01(), rng.uniform01());
    const Eigen::Vector3d bg(rng.uniform01(), rng.uniform01(), rng.uniform01());
    const int n = 256;
    RngStream mid(0);
    const auto depths = stratified_sample(0.0, 1.0, n, false, mid);
    Eigen::Matrix<double, Eigen::Dynamic, 3> colors(n, 3);
    Eigen::VectorXd densities(n);
    for (int i = 0; i < n; ++i) {
      colors.row(i) = c.transpose();
      densities[i] = sigma;
    }
    const CompositeResult r = composite(colors, densities, depths, 1.0, bg);
    const Eigen::Vector3d analytic = c * (1 - std::exp(-sigma)) + std::exp(-sigma) * bg;
    worst = std::max(worst, (r.pixel_color - analytic).cwiseAbs().maxCoeff());
    if (worst >= 1e-3) analytic_ok = false;
  }

  bool identity_ok = true;
  double worst_identity = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(30));
    std::vector<double> depths;
    double t = rng.uniform(0.0, 0.2);
    for (int i = 0; i < n; ++i) {
      depths.push_back(t);
      t += rng.uniform(0.01, 0.3);
    }
    const double far = t + 0.1;
    Eigen::Matrix<double, Eigen::Dynamic, 3> colors(n, 3);
    Eigen::VectorXd densities(n);
    double sum_sd = 0;
    for (int i = 0; i < n; ++i) {
      colors.row(i).setConstant(rng.uniform01());
      densities[i] = rng.uniform(0.0, 8.0);
      sum_sd += densities[i] * ((i + 1 < n ? depths[static_cast<std::size_t>(i + 1)] : far) -
                                depths[static_cast<std::size_t>(i)]);
    }
    const CompositeResult r = composite(colors, densities, depths, far, Eigen::Vector3d::Zero());
    double wsum = 0;
    for (double w : r.weights) wsum += w;
    worst_identity = std::max(worst_identity, std::abs(wsum - (1 - std::exp(-sum_sd))));
    if (worst_identity >= 1e-6) identity_ok = false;
  }

  std::ostringstream os;
  os << "rendering oracle: analytic integral worst " << worst << " (tol 1e-3), weight-sum worst "
     << worst_identity << " (tol 1e-6)";
  record(1, analytic_ok && identity_ok, os.str());
}

// ---------------------------------------------------------------- 2
struct TinySetup {
  TrainingConfig cfg;
  Tensor<double> reals;        // [B,3,4,4]
  Tensor<double> z_rand;       // [B,zd]
  std::vector<Pose> d_poses;
  Tensor<double> d_rand;       // [B,2]

  TinySetup() {
    cfg.total_iterations = 10;
    cfg.batch_size = 2;
    cfg.seed = 2002;
    cfg.generator.z_dim = 3;
    cfg.generator.mapping_layers = 1;
    cfg.generator.mapping_width = 8;
    cfg.generator.field_layers = 2;
    cfg.generator.field_width = 6;
    cfg.generator.omega0 = 8.0;
    cfg.conv_channels = {4, 8};
    cfg.base_resolution = 4;
    cfg.stages = {StageSpec{0, 4, 3, 1e-3, 1e-3, 1e-3}};
    cfg.validate();
    RngStream rng(17);
    reals = Tensor<double>({2, 3, 4, 4});
    for (std::int64_t i = 0; i < reals.numel(); ++i) reals.data[i] = rng.uniform(-0.9, 0.9);
    z_rand = Tensor<double>({2, 3});
    for (std::int64_t i = 0; i < z_rand.numel(); ++i) z_rand.data[i] = rng.uniform(-1, 1);
    d_poses = {Pose{1.2, 0.7}, Pose{1.0, 2.9}};
    d_rand = Tensor<double>({2, 2});
    for (int b = 0; b < 2; ++b) {
      d_rand.mat(2, 2)(b, 0) = d_poses[static_cast<std::size_t>(b)].pitch;
      d_rand.mat(2, 2)(b, 1) = d_poses[static_cast<std::size_t>(b)].yaw;
    }
  }
};

// Builds one named objective on the caller's tape; returns the loss var.
Tape<double>::Var build_objective(const std::string& which, Tape<double>& t,
                                  ParamLeaves<double>& lv, Trainer<double>& tr,
                                  const TinySetup& s) {
  const RenderConfig rc = tr.render_config_at(0, false);
  const TrainingConfig& cfg = tr.config();
  const Generator<double>& gen = tr.generator();
  const Discriminator<double>& disc = tr.discriminator();
  const Encoder<double>& enc = tr.encoder();
  RngStream rng(5);
  if (which == "gan_generator") {
    auto img = gen.generate_images(t, t.constant(s.z_rand), s.d_poses, rc, cfg.camera_radius,
                                   cfg.camera_fov, lv, rng, true);
    auto d_out = disc.forward(t, img, lv, false);
    return loss::gan_generator(t, d_out.logit, t.constant(s.d_rand), d_out.pose, 15.0);
  }
  if (which == "gan_discriminator") {
    auto fakes = gen.generate_images(t, t.constant(s.z_rand), s.d_poses, rc, cfg.camera_radius,
                                     cfg.camera_fov, lv, rng, false);
    auto real_out = disc.forward(t, t.constant(s.reals), lv, true);
    auto fake_out = disc.forward(t, fakes, lv, true);
    return loss::gan_discriminator(t, real_out.logit, fake_out.logit, t.constant(s.d_rand),
                                   fake_out.pose, 15.0);
  }
  if (which == "gan_inversion") {
    auto fakes = gen.generate_images(t, t.constant(s.z_rand), s.d_poses, rc, cfg.camera_radius,
                                     cfg.camera_fov, lv, rng, false);
    auto enc_out = enc.forward(t, fakes, lv, true);
    return loss::gan_inversion(t, enc_out.z, t.constant(s.z_rand), enc_out.pose,
                               t.constant(s.d_rand));
  }
  if (which == "reconstruction") {
    static PerceptualExtractor<double> extractor(7777);
    auto enc_out = enc.forward(t, t.constant(s.reals), lv, true);
    auto recon = gen.generate_images_posed(t, enc_out.z, t.slice_cols(enc_out.pose, 0, 1),
                                           t.slice_cols(enc_out.pose, 1, 2), rc, cfg.camera_radius,
                                           cfg.camera_fov, lv, rng, true);
    return loss::reconstruction(t, recon, t.constant(s.reals), cfg.weights, &extractor);
  }
  if (which == "conditional") {
    auto enc_out = enc.forward(t, t.constant(s.reals), lv, true);
    auto img = gen.generate_images(t, enc_out.z, s.d_poses, rc, cfg.camera_radius, cfg.camera_fov,
                                   lv, rng, true);
    auto d_out = disc.forward(t, img, lv, false);
    return loss::conditional_adversarial(t, d_out.logit);
  }
  throw std::runtime_error("unknown objective " + which);
}

void criterion_2_gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  TinySetup s;
  s.cfg.weights.lambda_vgg = 1.0;  // exercise the perceptual term too
  Trainer<double> tr(s.cfg);

  struct Case {
    const char* objective;
    std::vector<std::string> groups;
  };
  const std::vector<Case> cases = {
      {"gan_generator", {"g."}},
      {"gan_discriminator", {"d."}},
      {"gan_inversion", {"e."}},
      {"reconstruction", {"g.", "e."}},
      {"conditional", {"g.", "e."}},
  };

  bool all_ok = true;
  std::ostringstream os;
  os << "gradient suite:";
  for (const auto& c : cases) {
    Tape<double> tape;
    ParamLeaves<double> leaves(tape, tr.state().params);
    auto loss = build_objective(c.objective, tape, leaves, tr, s);
    tape.backward(loss);

    std::map<std::string, Tensor<double>> grads;
    std::vector<std::pair<std::string, Tensor<double>*>> slots;
    for (const auto& prefix : c.groups) {
      leaves.for_each_grad(prefix, [&](const std::string& name, const Tensor<double>& g) {
        grads.emplace(name, g);
      });
      for (const auto& name : tr.state().params.names_with_prefix(prefix))
        slots.emplace_back(name, &tr.state().params.get(name));
    }
    auto eval = [&]() {
      Tape<double> t2;
      ParamLeaves<double> l2(t2, tr.state().params);
      auto v = build_objective(c.objective, t2, l2, tr, s);
      return t2.val(v).data[0];
    };
    auto analytic = [&](const std::string& name) -> const Tensor<double>& {
      auto it = grads.find(name);
      if (it == grads.end()) {
        static Tensor<double> zero;
        zero = Tensor<double>(tr.state().params.get(name).shape);
        return zero;
      }
      return it->second;
    };
    const auto res = check_gradients(eval, slots, analytic, 1e-5);
    os << " " << c.objective << " max_rel_err=" << res.max_rel_err << " (" << res.checked
       << " params)";
    if (!(res.max_rel_err < 1e-4)) {
      all_ok = false;
      os << " WORST " << res.worst;
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  os << " [" << seconds << "s]";
  record(2, all_ok, os.str());
}

// ---------------------------------------------------------------- 3
void criterion_3_closed_forms() {
  constexpr double kLn2 = 0.6931471805599453;
  bool ok = true;
  std::ostringstream os;

  auto check = [&](const char* name, double got, double want) {
    const bool match = std::abs(got - want) < 1e-9;
    if (!match) {
      ok = false;
      os << " " << name << " got " << got << " want " << want << ";";
    }
  };

  {
    Tape<double> t;
    Tensor<double> zero({1, 1});
    Tensor<double> pose({1, 2});
    auto l = loss::gan_generator(t, t.constant(zero), t.constant(pose), t.constant(pose), 15.0);
    check("softplus(0)=ln2", t.val(l).data[0], kLn2);
  }
  {
    Tape<double> t;
    Tensor<double> zero({1, 1});
    Tensor<double> pose({1, 2});
    auto l = loss::gan_discriminator(t, t.constant(zero), t.constant(zero), t.constant(pose),
                                     t.constant(pose), 15.0);
    check("2*ln2", t.val(l).data[0], 2 * kLn2);
  }
  {
    Tape<double> t;
    Tensor<double> z({1, 16});
    z.data.setConstant(0.3);
    Tensor<double> pose({1, 2});
    pose.data << 1.1, 2.2;
    auto l = loss::gan_inversion(t, t.constant(z), t.constant(z), t.constant(pose), t.constant(pose));
    check("inversion zero", t.val(l).data[0], 0.0);
  }
  {
    RngStream rng(3003);
    Tensor<double> img({1, 3, 8, 8});
    for (std::int64_t i = 0; i < img.numel(); ++i) img.data[i] = rng.uniform(-1, 1);
    PerceptualExtractor<double> extractor(5);
    LossWeights w;
    Tape<double> t;
    auto l = loss::reconstruction(t, t.constant(img), t.constant(img), w, &extractor);
    check("reconstruction zero", t.val(l).data[0], 0.0);
  }
  {
    Tape<double> t;
    Tensor<double> zero({1, 1});
    auto l = loss::conditional_adversarial(t, t.constant(zero));
    check("cond ln2", t.val(l).data[0], kLn2);
  }
  record(3, ok, "closed-form loss values (softplus ln2 / 2ln2, inversion zero, reconstruction "
                "zero, conditional ln2) within 1e-9" +
                    os.str());
}

// ---------------------------------------------------------------- 4
void criterion_4_metric_oracles() {
  bool ok = true;
  std::ostringstream os;
  RngStream rng(4004);

  {
    Eigen::MatrixXd x(32, 6);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    if (!(fid(x, x) < 1e-6)) {
      ok = false;
      os << " fid(X,X)=" << fid(x, x) << ";";
    }
  }
  {
    Eigen::MatrixXd a(24, 1), b(24, 1);
    for (int i = 0; i < 24; ++i) {
      const double v = rng.normal();
      a(i, 0) = v;
      b(i, 0) = v + 0.9;
    }
    if (std::abs(fid(a, b) - 0.81) > 1e-9) {
      ok = false;
      os << " 1-d fid=" << fid(a, b) << " want 0.81;";
    }
  }
  {
    bool kid_ok = true;
    for (int trial = 0; trial < 8; ++trial) {
      const int m = 2 + static_cast<int>(rng.uniform_index(7));
      const int n = 2 + static_cast<int>(rng.uniform_index(7));
      const int d = 1 + static_cast<int>(rng.uniform_index(3));
      Eigen::MatrixXd a(m, d), b(n, d);
      for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-2, 2);
      for (int i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-2, 2);
      auto k = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return std::pow(x.dot(y) / d + 1.0, 3.0);
      };
      double saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          if (i != j) saa += k(a.row(i), a.row(j));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) sbb += k(b.row(i), b.row(j));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) sab += k(a.row(i), b.row(j));
      const double oracle = saa / (double(m) * (m - 1)) + sbb / (double(n) * (n - 1)) -
                            2 * sab / (double(m) * n);
      if (std::abs(kid(a, b) - oracle) > 1e-12) kid_ok = false;
    }
    if (!kid_ok) {
      ok = false;
      os << " kid brute-force mismatch;";
    }
  }
  {
    Eigen::MatrixXd uniform(5, 4);
    uniform.setConstant(0.25);
    if (std::abs(inception_score(uniform) - 1.0) > 1e-9) {
      ok = false;
      os << " IS uniform;";
    }
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Identity(6, 6);
    if (std::abs(inception_score(onehot) - 6.0) > 1e-9) {
      ok = false;
      os << " IS one-hot;";
    }
  }
  {
    std::vector<double> zeros(16, 0.0), halves(16, 0.5), a = {0.1, 0.2};
    if (psnr(a, a, 1.0) != 100.0) {
      ok = false;
      os << " psnr cap;";
    }
    if (std::abs(psnr(halves, zeros, 1.0) - 6.020599913279624) > 1e-9) {
      ok = false;
      os << " psnr arithmetic;";
    }
  }
  {
    Tensor<double> a({1, 3, 8, 8}), b({1, 3, 8, 8});
    for (std::int64_t i = 0; i < a.numel(); ++i) {
      a.data[i] = rng.uniform(-1, 1);
      b.data[i] = rng.uniform(-1, 1);
    }
    Tape<double> t;
    const double self = t.val(ssim(t, t.constant(a), t.constant(a))).data[0];
    if (std::abs(self - 1.0) > 1e-12) {
      ok = false;
      os << " ssim self=" << self << ";";
    }
    // Direct-formula oracle, 7x7 window on 8x8 frames.
    const int win = 7;
    std::vector<double> kern;
    {
      double total = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double v =
              std::exp(-((i - 3.0) * (i - 3.0) + (j - 3.0) * (j - 3.0)) / (2 * 1.5 * 1.5));
          kern.push_back(v);
          total += v;
        }
      for (auto& v : kern) v /= total;
    }
    double acc = 0;
    int count = 0;
    for (int s = 0; s < 3; ++s) {
      const double* pa = a.data.data() + s * 64;
      const double* pb = b.data.data() + s * 64;
      for (int i = 0; i + win <= 8; ++i)
        for (int j = 0; j + win <= 8; ++j) {
          double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
          for (int ki = 0; ki < win; ++ki)
            for (int kj = 0; kj < win; ++kj) {
              const double ua = (pa[(i + ki) * 8 + j + kj] + 1) / 2;
              const double ub = (pb[(i + ki) * 8 + j + kj] + 1) / 2;
              const double kv = kern[static_cast<std::size_t>(ki * win + kj)];
              mu_a += kv * ua;
              mu_b += kv * ub;
              aa += kv * ua * ua;
              bb += kv * ub * ub;
              ab += kv * ua * ub;
            }
          acc += ((2 * mu_a * mu_b + 1e-4) * (2 * (ab - mu_a * mu_b) + 9e-4)) /
                 ((mu_a * mu_a + mu_b * mu_b + 1e-4) *
                  ((aa - mu_a * mu_a) + (bb - mu_b * mu_b) + 9e-4));
          ++count;
        }
    }
    Tape<double> t2;
    const double impl = t2.val(ssim(t2, t2.constant(a), t2.constant(b))).data[0];
    if (std::abs(impl - acc / count) > 1e-6) {
      ok = false;
      os << " ssim oracle impl=" << impl << " oracle=" << acc / count << ";";
    }
  }
  record(4, ok, "metric oracles (fid identity & 1-d closed form, kid brute force <= 8, IS "
                "uniform/one-hot, psnr arithmetic, ssim self & direct formula)" +
                    os.str());
}

// ---------------------------------------------------------------- 5
void criterion_5_schedule_invariants() {
  bool ok = true;
  std::ostringstream os;

  // Routing table across parity x warm-up x ablations (full + A..J).
  const char tags[] = {0, 'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J'};
  for (char tag : tags) {
    const AblationFlags flags = tag ? ablation_flags_from_tag(tag) : AblationFlags{};
    for (bool odd : {false, true}) {
      for (bool warm_in : {false, true}) {
        const bool warm = warmup_active(warm_in ? 0 : 900, 1000, flags);
        const RoutingDecision r = route_step(odd, warm, flags);
        bool expect_d = tag != 'A';
        bool expect_inv = tag != 'B' && tag != 'C';
        bool expect_g_gan = !odd && tag != 'A' && tag != 'B';
        bool expect_g_odd = odd && tag != 'A';
        bool expect_e_odd = odd && !warm;
        bool expect_cond = odd && tag != 'D';
        if (r.update_d != expect_d || r.update_e_inversion != expect_inv ||
            r.update_g_gan != expect_g_gan || r.update_g_odd != expect_g_odd ||
            r.update_e_odd != expect_e_odd || (r.run_odd && r.include_cond) != expect_cond) {
          ok = false;
          os << " routing mismatch tag=" << (tag ? tag : '0') << " odd=" << odd
             << " warm=" << warm << ";";
        }
      }
    }
  }

  // Live bit-checks: warm-up odd step freezes E for the odd objective while
  // inversion still moves it.
  {
    TinySetup s;
    Trainer<float> tr([&] {
      TrainingConfig cfg = s.cfg;
      cfg.weights.lambda_vgg = 0.0;
      return cfg;
    }());
    const PosePrior prior = PosePrior::gaussian(Pose{1.3, kPi}, 0.1, 0.4);
    const auto images = make_synthetic_dataset(4, 1, prior, 4, 55).images();
    tr.training_step(images);  // even step
    std::map<std::string, Tensor<float>> before_e, after_inv, after_odd;
    bool inv_changed = false, odd_frozen = true;
    auto observer = [&](const std::string& sub, const TrainState<float>& st) {
      if (sub == "gan_d") {
        for (const auto& name : st.params.names_with_prefix("e."))
          before_e.emplace(name, st.params.get(name));
      } else if (sub == "inversion") {
        for (const auto& name : st.params.names_with_prefix("e."))
          if ((st.params.get(name).data - before_e.at(name).data).abs().maxCoeff() != 0)
            inv_changed = true;
        after_inv.clear();
        for (const auto& name : st.params.names_with_prefix("e."))
          after_inv.emplace(name, st.params.get(name));
      } else if (sub == "odd") {
        for (const auto& name : st.params.names_with_prefix("e."))
          if ((st.params.get(name).data - after_inv.at(name).data).abs().maxCoeff() != 0)
            odd_frozen = false;
      }
    };
    tr.training_step(images, observer);  // odd step inside warm-up
    if (!inv_changed) {
      ok = false;
      os << " inversion did not update E during warm-up;";
    }
    if (!odd_frozen) {
      ok = false;
      os << " odd objective moved E during warm-up;";
    }
  }

  // G..J set lambda_recon per the study legend.
  {
    TrainingConfig base;
    const double want[4] = {1.0, 0.1, 0.01, 0.001};
    for (int i = 0; i < 4; ++i) {
      const TrainingConfig cfg = ablation_config(static_cast<char>('G' + i), base);
      if (cfg.weights.lambda_recon != want[i] || !cfg.ablation.no_warmup) {
        ok = false;
        os << " tag " << static_cast<char>('G' + i) << " misconfigured;";
      }
    }
  }
  record(5, ok, "schedule/warm-up invariants (routing table 2x2x11, warm-up bit-freeze with live "
                "inversion, G..J lambda_recon)" +
                    os.str());
}

// ---------------------------------------------------------------- 6
std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_6_determinism(const fs::path& workdir) {
  TrainingConfig cfg;
  cfg.total_iterations = 100;
  cfg.batch_size = 2;
  cfg.seed = 606;
  cfg.generator.z_dim = 4;
  cfg.generator.mapping_layers = 1;
  cfg.generator.mapping_width = 8;
  cfg.generator.field_layers = 2;
  cfg.generator.field_width = 6;
  cfg.generator.omega0 = 8.0;
  cfg.conv_channels = {4, 8};
  cfg.base_resolution = 8;
  cfg.stages = {StageSpec{0, 8, 3, 1e-3, 1e-3, 1e-3}};
  cfg.weights.lambda_vgg = 0.0;
  cfg.validate();
  const PosePrior prior = PosePrior::gaussian(Pose{1.3, kPi}, 0.1, 0.4);
  const auto images = make_synthetic_dataset(6, 1, prior, 8, 66).images();

  auto run = [&](const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    Trainer<float> tr(cfg);
    std::ofstream csv(dir / "log.csv");
    tr.train(images, 100, &csv);
    csv.close();
    save_checkpoint(dir / "ckpt", tr.state(), cfg);
    return tr.state().iteration;
  };
  run(workdir / "det_a");
  run(workdir / "det_b");

  bool ok = file_bytes(workdir / "det_a" / "log.csv") == file_bytes(workdir / "det_b" / "log.csv");
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(workdir / "det_a" / "ckpt")) {
    const fs::path other = workdir / "det_b" / "ckpt" / entry.path().filename();
    if (!fs::exists(other) || file_bytes(entry.path()) != file_bytes(other)) {
      ok = false;
      break;
    }
    ++compared;
  }

  // Save/load round trip is bit-exact.
  Trainer<float> tr(cfg);
  tr.train(images, 7);
  save_checkpoint(workdir / "rt", tr.state(), cfg);
  const TrainState<float> loaded = load_checkpoint<float>(workdir / "rt", cfg);
  bool rt_ok = loaded.iteration == tr.state().iteration && loaded.rng == tr.state().rng;
  for (const auto& [name, t] : tr.state().params.all())
    if ((t.data - loaded.params.get(name).data).abs().maxCoeff() != 0) rt_ok = false;

  std::ostringstream os;
  os << "determinism: two 100-step runs bit-identical (" << compared
     << " checkpoint files + csv), save/load round trip bit-exact";
  record(6, ok && rt_ok, os.str());
}

// ---------------------------------------------------------------- 7 & 8
struct ToyBudget {
  std::int64_t iterations = 4000;
  int train_scenes = 192;
  int heldout_scenes = 32;
  int refine_subset = 6;
  int refine_iterations = 200;
  int fid_samples = 64;
  std::uint64_t seed = 7007;
};

TrainingConfig toy_config(const ToyBudget& budget) {
  TrainingConfig cfg;
  cfg.total_iterations = budget.iterations;
  cfg.batch_size = 6;
  cfg.seed = budget.seed;
  cfg.generator.z_dim = 16;
  cfg.generator.mapping_layers = 2;
  cfg.generator.mapping_width = 64;
  cfg.generator.field_layers = 3;
  cfg.generator.field_width = 48;
  cfg.generator.omega0 = 30.0;
  cfg.conv_channels = {16, 32, 64, 64};
  cfg.base_resolution = 32;
  cfg.stages = {StageSpec{0, 32, 16, 2e-4, 8e-4, 8e-4}};
  cfg.weights.lambda_pos = 15.0;
  cfg.weights.lambda_recon = 5.0;
  cfg.weights.lambda_ssim = 1.0;
  cfg.weights.lambda_vgg = 1.0;
  cfg.prior = PosePrior::gaussian(Pose{1.35, kPi}, 0.12, 0.5);
  cfg.validate();
  return cfg;
}

struct ToyOutcome {
  double psnr_model = 0, psnr_baseline = 0;
  double yaw_corr = 0;
  double psnr_refined = 0;
  double fid_trained = 0, fid_untrained = 0;
  bool trained = false;
};

double mean_psnr_feedforward(Trainer<float>& model, const std::vector<ImageTensor>& images) {
  double total = 0;
  for (const auto& img : images) total += psnr(reconstruct(model, img), img);
  return total / static_cast<double>(images.size());
}

double conditional_fid(Trainer<float>& model, const Dataset& heldout, int n, std::uint64_t seed) {
  EvaluateOptions opt;
  opt.mode = EvalMode::kConditional;
  opt.n_samples = n;
  opt.seed = seed;
  opt.classifier_steps = 0;  // FID only; skip the IS fixture here
  const auto report = evaluate(model, heldout, opt);
  for (const auto& e : report)
    if (e.name == "fid") return e.value;
  throw std::runtime_error("fid missing from evaluation report");
}

void criterion_7_toy_run(const ToyBudget& budget, const fs::path& workdir, ToyOutcome& outcome,
                         Trainer<float>** model_out, Dataset** heldout_out) {
  const TrainingConfig cfg = toy_config(budget);
  SyntheticOptions synth;
  synth.camera_radius = cfg.camera_radius;
  synth.camera_fov = cfg.camera_fov;

  static Dataset train_set = make_synthetic_dataset(budget.train_scenes, 1, cfg.prior, 32,
                                                    budget.seed ^ 0x7e57da7aULL, synth);
  static Dataset heldout = make_synthetic_dataset(budget.heldout_scenes, 1, cfg.prior, 32,
                                                  budget.seed ^ 0x8e1d007ULL, synth);
  *heldout_out = &heldout;

  static Trainer<float> model(cfg);
  *model_out = &model;
  {
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(workdir);
    std::ofstream csv(workdir / "toy_train_log.csv");
    model.train(train_set.images(), cfg.total_iterations, &csv);
    save_checkpoint(workdir / "toy_checkpoint", model.state(), cfg);
    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    std::cout << "  [info] toy training: " << cfg.total_iterations << " iterations in " << minutes
              << " min\n";
  }
  outcome.trained = true;

  // (a) feed-forward reconstruction PSNR vs the dataset-mean baseline.
  outcome.psnr_model = mean_psnr_feedforward(model, heldout.images());
  {
    ImageTensor mean_img(32, 32);
    for (const auto& img : train_set.images())
      for (std::size_t i = 0; i < img.chw.size(); ++i) mean_img.chw[i] += img.chw[i];
    for (auto& v : mean_img.chw) v /= static_cast<float>(train_set.size());
    double total = 0;
    for (const auto& img : heldout.images()) total += psnr(mean_img, img);
    outcome.psnr_baseline = total / static_cast<double>(heldout.size());
  }
  const bool pass_a = outcome.psnr_model >= 15.0 && outcome.psnr_baseline < outcome.psnr_model;

  // (b) encoder yaw vs hidden ground-truth yaw, circular correlation up to
  // offset/sign.
  {
    std::vector<double> yaw_pred, yaw_true;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
      const EncodedImage<float> enc = encode_image(model, heldout.images()[i]);
      yaw_pred.push_back(enc.pose.yaw);
      yaw_true.push_back(heldout.ground_truth()->poses[i].yaw);
    }
    outcome.yaw_corr = circular_correlation(yaw_pred, yaw_true);
  }
  const bool pass_b = std::abs(outcome.yaw_corr) >= 0.5;

  // (c) hybrid refinement beats feed-forward by >= 2 dB on the subset.
  double psnr_ff_subset = 0;
  {
    double ff = 0, refined = 0;
    const int n = std::min<int>(budget.refine_subset, static_cast<int>(heldout.size()));
    for (int i = 0; i < n; ++i) {
      const ImageTensor& img = heldout.images()[static_cast<std::size_t>(i)];
      ff += psnr(reconstruct(model, img), img);
      RefineOptions opt;
      opt.iterations = budget.refine_iterations;
      opt.step_size = 5e-3;
      const RefineResult<float> r = refine_latent(model, img, opt);
      refined += psnr(r.reconstruction, img);
    }
    outcome.psnr_refined = refined / n;
    psnr_ff_subset = ff / n;
    std::cout << "  [info] refine: feed-forward " << psnr_ff_subset << " dB -> "
              << outcome.psnr_refined << " dB over " << n << " held-out images\n";
  }
  const bool pass_c = outcome.psnr_refined - psnr_ff_subset >= 2.0;

  // (d) trained conditional FID below the untrained model's.
  outcome.fid_trained = conditional_fid(model, heldout, budget.fid_samples, budget.seed);
  {
    Trainer<float> untrained(cfg);
    outcome.fid_untrained = conditional_fid(untrained, heldout, budget.fid_samples, budget.seed);
  }
  const bool pass_d = outcome.fid_trained < outcome.fid_untrained;

  std::ostringstream os;
  os << "toy run: (a) conditional PSNR " << outcome.psnr_model << " dB (threshold 15, baseline "
     << outcome.psnr_baseline << "); (b) yaw circular correlation " << outcome.yaw_corr
     << " (threshold 0.5); (c) refined " << psnr_ff_subset << " -> " << outcome.psnr_refined
     << " dB (needs +2); (d) conditional FID " << outcome.fid_trained << " vs untrained "
     << outcome.fid_untrained;
  record(7, pass_a && pass_b && pass_c && pass_d, os.str());
}

void criterion_8_ablation_direction(const ToyBudget& budget, const fs::path& workdir,
                                    Trainer<float>* full_model, Dataset* heldout,
                                    double fid_full) {
  const TrainingConfig cfg_e = ablation_config('E', toy_config(budget));
  SyntheticOptions synth;
  synth.camera_radius = cfg_e.camera_radius;
  synth.camera_fov = cfg_e.camera_fov;
  const Dataset train_set = make_synthetic_dataset(budget.train_scenes, 1, cfg_e.prior, 32,
                                                   budget.seed ^ 0x7e57da7aULL, synth);
  Trainer<float> model_e(cfg_e);
  {
    const auto start = std::chrono::steady_clock::now();
    std::ofstream csv(workdir / "ablation_e_train_log.csv");
    model_e.train(train_set.images(), cfg_e.total_iterations, &csv);
    save_checkpoint(workdir / "ablation_e_checkpoint", model_e.state(), cfg_e);
    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    std::cout << "  [info] ablation E training: " << cfg_e.total_iterations << " iterations in "
              << minutes << " min\n";
  }
  const double fid_e = conditional_fid(model_e, *heldout, budget.fid_samples, budget.seed);
  const bool direction_holds = fid_e >= fid_full;

  // The comparison report is always generated; a failed direction is
  // flagged inside it rather than silently dropped.
  {
    std::ofstream out(workdir / "ablation_direction_report.txt");
    out.precision(10);
    out << "ablation direction check (identical seeds and budgets)\n";
    out << "budget_iterations=" << budget.iterations << " seed=" << budget.seed << "\n";
    out << "conditional_fid_full=" << fid_full << "\n";
    out << "conditional_fid_no_warmup=" << fid_e << "\n";
    out << "expected_direction=no_warmup_fid >= full_fid\n";
    out << "direction_holds=" << (direction_holds ? "yes" : "NO (flagged)") << "\n";
  }
  (void)full_model;

  std::ostringstream os;
  os << "ablation direction: no-warm-up conditional FID " << fid_e << " vs full " << fid_full
     << " (report written" << (direction_holds ? ")" : ", direction FAILURE flagged)");
  record(8, direction_holds, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  ToyBudget budget;
  fs::path workdir = fs::temp_directory_path() / "nerfgan_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) throw std::runtime_error("missing value for " + arg);
      return argv[++i];
    };
    if (arg == "--criteria") {
      std::stringstream ss(next());
      std::string part;
      while (std::getline(ss, part, ',')) wanted.insert(std::stoi(part));
    } else if (arg == "--iters") {
      budget.iterations = std::stoll(next());
    } else if (arg == "--scenes") {
      budget.train_scenes = std::stoi(next());
    } else if (arg == "--fid-samples") {
      budget.fid_samples = std::stoi(next());
    } else if (arg == "--refine-iters") {
      budget.refine_iterations = std::stoi(next());
    } else if (arg == "--seed") {
      budget.seed = std::stoull(next());
    } else if (arg == "--workdir") {
      workdir = next();
    } else {
      std::cerr << "unknown flag " << arg << "\n";
      return 2;
    }
  }
  auto run = [&](int id) { return wanted.empty() || wanted.count(id); };
  fs::create_directories(workdir);

  try {
    if (run(1)) criterion_1_rendering_oracle();
    if (run(2)) criterion_2_gradient_suite();
    if (run(3)) criterion_3_closed_forms();
    if (run(4)) criterion_4_metric_oracles();
    if (run(5)) criterion_5_schedule_invariants();
    if (run(6)) criterion_6_determinism(workdir);
    ToyOutcome outcome;
    Trainer<float>* model = nullptr;
    Dataset* heldout = nullptr;
    if (run(7) || run(8)) criterion_7_toy_run(budget, workdir, outcome, &model, &heldout);
    if (run(8)) criterion_8_ablation_direction(budget, workdir, model, heldout, outcome.fid_trained);
  } catch (const std::exception& e) {
    std::cerr << "acceptance suite aborted: " << e.what() << "\n";
    return 1;
  }

  int failed = 0;
  for (const auto& r : g_results)
    if (!r.pass) ++failed;
  std::cout << (failed == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
            << g_results.size() - static_cast<std::size_t>(failed) << "/" << g_results.size()
            << " criteria)\n";
  return failed == 0 ? 0 : 1;
}
