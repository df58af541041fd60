// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <string>

#include "nerfgan/geometry.hpp"
#include "nerfgan/perceptual.hpp"
#include "nerfgan/ssim.hpp"
#include "nerfgan/tape.hpp"

namespace nerfgan {

struct LossWeights {
  double lambda_pos = 15.0;
  double lambda_ssim = 1.0;
  double lambda_vgg = 1.0;
  double lambda_recon = 5.0;

  void validate() const {
    const double vals[4] = {lambda_pos, lambda_ssim, lambda_vgg, lambda_recon};
    const char* names[4] = {"lambda_pos", "lambda_ssim", "lambda_vgg", "lambda_recon"};
    for (int i = 0; i < 4; ++i)
      if (!(vals[i] >= 0) || !std::isfinite(vals[i]))
        throw ConfigError(std::string("loss weights: ") + names[i] + " must be finite and >= 0");
  }
};

/// Named scalar losses of one step; every value is checked finite on insert.
struct LossReport {
  std::map<std::string, double> values;

  void set(const std::string& name, double v) {
    if (!std::isfinite(v)) throw EvalError("non-finite loss: " + name);
    values[name] = v;
  }
  double get(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw EvalError("missing loss: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return values.count(name) != 0; }
};

namespace loss {

/// Batch mean of sum-of-squares rows: mean_b ||a_b - b_b||^2.
template <class Real>
typename Tape<Real>::Var mean_sq_norm(Tape<Real>& tape, typename Tape<Real>::Var a,
                                      typename Tape<Real>::Var b) {
  return tape.mean_all(tape.sum_rows(tape.square(tape.sub(a, b))));
}

/// softplus(-l_gen) + lambda_pos * ||d_rand - d_gen||^2, batch mean.
template <class Real>
typename Tape<Real>::Var gan_generator(Tape<Real>& tape, typename Tape<Real>::Var l_gen,
                                       typename Tape<Real>::Var d_rand,
                                       typename Tape<Real>::Var d_gen, double lambda_pos) {
  auto realism = tape.mean_all(tape.softplus(tape.mul_scalar(l_gen, Real(-1))));
  if (lambda_pos == 0.0) return realism;
  return tape.add(realism,
                  tape.mul_scalar(mean_sq_norm(tape, d_rand, d_gen), Real(lambda_pos)));
}

/// softplus(-l_real) + softplus(l_gen) + lambda_pos * ||d_rand - d_gen||^2.
/// The pose term rides on generated samples only.
template <class Real>
typename Tape<Real>::Var gan_discriminator(Tape<Real>& tape, typename Tape<Real>::Var l_real,
                                           typename Tape<Real>::Var l_gen,
                                           typename Tape<Real>::Var d_rand,
                                           typename Tape<Real>::Var d_gen, double lambda_pos) {
  auto loss = tape.add(tape.mean_all(tape.softplus(tape.mul_scalar(l_real, Real(-1)))),
                       tape.mean_all(tape.softplus(l_gen)));
  if (lambda_pos == 0.0) return loss;
  return tape.add(loss, tape.mul_scalar(mean_sq_norm(tape, d_rand, d_gen), Real(lambda_pos)));
}

/// ||z_pred - z_rand||^2 + ||d_pred - d_rand||^2, batch mean.
template <class Real>
typename Tape<Real>::Var gan_inversion(Tape<Real>& tape, typename Tape<Real>::Var z_pred,
                                       typename Tape<Real>::Var z_rand,
                                       typename Tape<Real>::Var d_pred,
                                       typename Tape<Real>::Var d_rand) {
  return tape.add(mean_sq_norm(tape, z_pred, z_rand), mean_sq_norm(tape, d_pred, d_rand));
}

/// softplus(-l_cond), batch mean.
template <class Real>
typename Tape<Real>::Var conditional_adversarial(Tape<Real>& tape, typename Tape<Real>::Var l_cond) {
  return tape.mean_all(tape.softplus(tape.mul_scalar(l_cond, Real(-1))));
}

/// MSE + lambda_ssim * (1 - SSIM) + lambda_vgg * perceptual distance.
/// Identical images score exactly zero.
template <class Real>
typename Tape<Real>::Var reconstruction(Tape<Real>& tape, typename Tape<Real>::Var recon,
                                        typename Tape<Real>::Var real, const LossWeights& weights,
                                        const PerceptualExtractor<Real>* extractor,
                                        LossReport* report = nullptr) {
  weights.validate();
  auto total = tape.mse(recon, real);
  if (report) report->set("recon_mse", static_cast<double>(tape.val(total).data[0]));
  if (weights.lambda_ssim > 0) {
    auto ssim_loss = tape.add_scalar(tape.mul_scalar(ssim(tape, recon, real), Real(-1)), Real(1));
    if (report) report->set("recon_ssim_loss", static_cast<double>(tape.val(ssim_loss).data[0]));
    total = tape.add(total, tape.mul_scalar(ssim_loss, Real(weights.lambda_ssim)));
  }
  if (weights.lambda_vgg > 0) {
    if (!extractor) throw ConfigError("reconstruction loss: lambda_vgg > 0 needs an extractor");
    auto perc = extractor->distance(tape, recon, real);
    if (report) report->set("recon_perceptual", static_cast<double>(tape.val(perc).data[0]));
    total = tape.add(total, tape.mul_scalar(perc, Real(weights.lambda_vgg)));
  }
  return total;
}

}  // namespace loss

}  // namespace nerfgan
