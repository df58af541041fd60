// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "nerfgan/tape_conv.hpp"

namespace nerfgan {

/// Normalized 2-d Gaussian window, size x size.
template <class Real>
std::vector<Real> gaussian_window(int size, double sigma) {
  std::vector<Real> k(static_cast<std::size_t>(size) * size);
  double total = 0;
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double v = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2 * sigma * sigma));
      k[static_cast<std::size_t>(i) * size + j] = static_cast<Real>(v);
      total += v;
    }
  for (auto& v : k) v = static_cast<Real>(v / total);
  return k;
}

/// Mean structural similarity between two [B,3,H,W] batches in [-1,1].
/// Images are remapped to [0,1]; local statistics use a Gaussian window of
/// `window` (shrunk to fit small frames, forced odd), sigma 1.5, constants
/// K1=0.01, K2=0.03 on dynamic range 1. Differentiable; ssim(a,a) == 1.
template <class Real>
typename Tape<Real>::Var ssim(Tape<Real>& tape, typename Tape<Real>::Var a,
                              typename Tape<Real>::Var b, int window = 11) {
  const Tensor<Real>& av = tape.val(a);
  if (!av.same_shape(tape.val(b))) throw std::runtime_error("ssim: shape mismatch");
  if (av.ndim() != 4) throw std::runtime_error("ssim: input must be [B,C,H,W]");
  int win = std::min({window, av.dim(2), av.dim(3)});
  if (win % 2 == 0) --win;
  if (win < 1) throw std::runtime_error("ssim: degenerate window");
  const std::vector<Real> kernel = gaussian_window<Real>(win, 1.5);

  const Real c1 = Real(0.01 * 0.01);
  const Real c2 = Real(0.03 * 0.03);

  auto blur = [&](typename Tape<Real>::Var x) { return depthwise_valid_conv(tape, x, kernel, win, win); };

  auto ua = tape.affine(a, Real(0.5), Real(0.5));
  auto ub = tape.affine(b, Real(0.5), Real(0.5));
  auto mu_a = blur(ua);
  auto mu_b = blur(ub);
  auto mu_aa = tape.mul(mu_a, mu_a);
  auto mu_bb = tape.mul(mu_b, mu_b);
  auto mu_ab = tape.mul(mu_a, mu_b);
  auto var_a = tape.sub(blur(tape.mul(ua, ua)), mu_aa);
  auto var_b = tape.sub(blur(tape.mul(ub, ub)), mu_bb);
  auto cov = tape.sub(blur(tape.mul(ua, ub)), mu_ab);

  auto num = tape.mul(tape.add_scalar(tape.mul_scalar(mu_ab, Real(2)), c1),
                      tape.add_scalar(tape.mul_scalar(cov, Real(2)), c2));
  auto den = tape.mul(tape.add_scalar(tape.add(mu_aa, mu_bb), c1),
                      tape.add_scalar(tape.add(var_a, var_b), c2));
  return tape.mean_all(tape.div(num, den));
}

}  // namespace nerfgan
