// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "nerfgan/tape.hpp"

namespace nerfgan {

namespace detail {

// Scatter one sample's image into an im2col matrix: col[(c*kh+ki)*kw+kj, ho*Wo+wo].
template <class Real>
void im2col(const Real* x, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho,
            int Wo, Real* col) {
  for (int c = 0; c < C; ++c) {
    const Real* plane = x + static_cast<std::int64_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        Real* dst = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) *
                              (static_cast<std::int64_t>(Ho) * Wo);
        for (int ho = 0; ho < Ho; ++ho) {
          const int h = ho * stride - pad + ki;
          for (int wo = 0; wo < Wo; ++wo) {
            const int w = wo * stride - pad + kj;
            *dst++ = (h >= 0 && h < H && w >= 0 && w < W)
                         ? plane[static_cast<std::int64_t>(h) * W + w]
                         : Real(0);
          }
        }
      }
    }
  }
}

template <class Real>
void col2im_add(const Real* col, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho,
                int Wo, Real* dx) {
  for (int c = 0; c < C; ++c) {
    Real* plane = dx + static_cast<std::int64_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const Real* src = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) *
                                    (static_cast<std::int64_t>(Ho) * Wo);
        for (int ho = 0; ho < Ho; ++ho) {
          const int h = ho * stride - pad + ki;
          if (h < 0 || h >= H) {
            src += Wo;
            continue;
          }
          for (int wo = 0; wo < Wo; ++wo) {
            const int w = wo * stride - pad + kj;
            if (w >= 0 && w < W) plane[static_cast<std::int64_t>(h) * W + w] += src[wo];
          }
          src += Wo;
        }
      }
    }
  }
}

}  // namespace detail

/// 2-d convolution. x:[B,C,H,W], w:[F, C*kh*kw], b:[F] -> [B,F,Ho,Wo].
/// im2col buffers are kept alive for the backward pass.
template <class Real>
typename Tape<Real>::Var conv2d(Tape<Real>& tape, typename Tape<Real>::Var x,
                                typename Tape<Real>::Var w, typename Tape<Real>::Var b, int kh,
                                int kw, int stride, int pad) {
  const Tensor<Real>& xv = tape.val(x);
  if (xv.ndim() != 4) throw std::runtime_error("conv2d: input must be [B,C,H,W]");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  const int F = tape.val(w).rows();
  const int ck = C * kh * kw;
  if (tape.val(w).cols() != ck) throw std::runtime_error("conv2d: weight shape mismatch");
  if (tape.val(b).numel() != F) throw std::runtime_error("conv2d: bias shape mismatch");
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  if (Ho <= 0 || Wo <= 0) throw std::runtime_error("conv2d: empty output");

  auto cols = std::make_shared<Tensor<Real>>(std::vector<int>{B, ck, Ho * Wo});
  Tensor<Real> out({B, F, Ho, Wo});
  const auto wm = tape.val(w).mat(F, ck);
  const auto bv = tape.val(b).mat(1, F);
  for (int s = 0; s < B; ++s) {
    Real* col = cols->data.data() + static_cast<std::int64_t>(s) * ck * Ho * Wo;
    detail::im2col(xv.data.data() + static_cast<std::int64_t>(s) * C * H * W, C, H, W, kh, kw,
                   stride, pad, Ho, Wo, col);
    Eigen::Map<MatX<Real>> ym(out.data.data() + static_cast<std::int64_t>(s) * F * Ho * Wo, F,
                              Ho * Wo);
    ym.noalias() = wm * Eigen::Map<const MatX<Real>>(col, ck, Ho * Wo);
    ym.array().colwise() += bv.array().row(0).transpose();
  }

  const bool req_x = tape.node(x.id).requires_grad;
  const bool req_w = tape.node(w.id).requires_grad;
  const bool req_b = tape.node(b.id).requires_grad;
  const int ix = x.id, iw = w.id, ib = b.id;
  const int id = static_cast<int>(tape.size());
  std::function<void(Tape<Real>&)> bwd;
  if (req_x || req_w || req_b) {
    bwd = [=](Tape<Real>& t) {
      const Tensor<Real>& g = t.node(id).grad;
      Tensor<Real> dw({F, ck});
      Tensor<Real> db({F});
      Tensor<Real> dx;
      if (req_x) dx = Tensor<Real>({B, C, H, W});
      Tensor<Real> dcol({ck, Ho * Wo});
      const auto wmat = t.node(iw).value.mat(F, ck);
      for (int s = 0; s < B; ++s) {
        Eigen::Map<const MatX<Real>> gm(g.data.data() + static_cast<std::int64_t>(s) * F * Ho * Wo,
                                        F, Ho * Wo);
        Eigen::Map<const MatX<Real>> colm(
            cols->data.data() + static_cast<std::int64_t>(s) * ck * Ho * Wo, ck, Ho * Wo);
        if (req_w) dw.mat().noalias() += gm * colm.transpose();
        if (req_b)
          db.mat(F, 1).noalias() += gm.rowwise().sum();
        if (req_x) {
          dcol.mat().noalias() = wmat.transpose() * gm;
          detail::col2im_add(dcol.data.data(), C, H, W, kh, kw, stride, pad, Ho, Wo,
                             dx.data.data() + static_cast<std::int64_t>(s) * C * H * W);
        }
      }
      if (req_w) t.accum_data(iw, dw.data);
      if (req_b) t.accum_data(ib, db.data);
      if (req_x) t.accum_data(ix, dx.data);
    };
  }
  return tape.custom(std::move(out), req_x || req_w || req_b, std::move(bwd));
}

/// Depthwise 'valid' convolution with a fixed (non-trained) kernel; used for
/// windowed statistics such as the SSIM blur.
template <class Real>
typename Tape<Real>::Var depthwise_valid_conv(Tape<Real>& tape, typename Tape<Real>::Var x,
                                              const std::vector<Real>& kernel, int kh, int kw) {
  const Tensor<Real>& xv = tape.val(x);
  if (xv.ndim() != 4) throw std::runtime_error("depthwise_valid_conv: input must be [B,C,H,W]");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  if (static_cast<int>(kernel.size()) != kh * kw)
    throw std::runtime_error("depthwise_valid_conv: kernel size mismatch");
  const int Ho = H - kh + 1, Wo = W - kw + 1;
  if (Ho <= 0 || Wo <= 0) throw std::runtime_error("depthwise_valid_conv: window larger than input");

  Tensor<Real> out({B, C, Ho, Wo});
  for (int s = 0; s < B * C; ++s) {
    const Real* plane = xv.data.data() + static_cast<std::int64_t>(s) * H * W;
    Real* op = out.data.data() + static_cast<std::int64_t>(s) * Ho * Wo;
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo) {
        Real acc = 0;
        for (int ki = 0; ki < kh; ++ki)
          for (int kj = 0; kj < kw; ++kj)
            acc += kernel[ki * kw + kj] * plane[static_cast<std::int64_t>(ho + ki) * W + wo + kj];
        op[static_cast<std::int64_t>(ho) * Wo + wo] = acc;
      }
  }

  const bool req = tape.node(x.id).requires_grad;
  const int ixp = x.id;
  const int id = static_cast<int>(tape.size());
  std::function<void(Tape<Real>&)> bwd;
  if (req) {
    bwd = [=](Tape<Real>& t) {
      const Tensor<Real>& g = t.node(id).grad;
      Tensor<Real> dx({B, C, H, W});
      for (int s = 0; s < B * C; ++s) {
        const Real* gp = g.data.data() + static_cast<std::int64_t>(s) * Ho * Wo;
        Real* dp = dx.data.data() + static_cast<std::int64_t>(s) * H * W;
        for (int ho = 0; ho < Ho; ++ho)
          for (int wo = 0; wo < Wo; ++wo) {
            const Real gval = gp[static_cast<std::int64_t>(ho) * Wo + wo];
            for (int ki = 0; ki < kh; ++ki)
              for (int kj = 0; kj < kw; ++kj)
                dp[static_cast<std::int64_t>(ho + ki) * W + wo + kj] += kernel[ki * kw + kj] * gval;
          }
      }
      t.accum_data(ixp, dx.data);
    };
  }
  return tape.custom(std::move(out), req, std::move(bwd));
}

/// 2x2 average pooling with stride 2 (H and W must be even).
template <class Real>
typename Tape<Real>::Var avg_pool2(Tape<Real>& tape, typename Tape<Real>::Var x) {
  const Tensor<Real>& xv = tape.val(x);
  if (xv.ndim() != 4) throw std::runtime_error("avg_pool2: input must be [B,C,H,W]");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  if (H % 2 || W % 2) throw std::runtime_error("avg_pool2: odd spatial size");
  const int Ho = H / 2, Wo = W / 2;
  Tensor<Real> out({B, C, Ho, Wo});
  for (int s = 0; s < B * C; ++s) {
    const Real* p = xv.data.data() + static_cast<std::int64_t>(s) * H * W;
    Real* op = out.data.data() + static_cast<std::int64_t>(s) * Ho * Wo;
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo)
        op[ho * Wo + wo] = Real(0.25) * (p[(2 * ho) * W + 2 * wo] + p[(2 * ho) * W + 2 * wo + 1] +
                                         p[(2 * ho + 1) * W + 2 * wo] +
                                         p[(2 * ho + 1) * W + 2 * wo + 1]);
  }
  const bool req = tape.node(x.id).requires_grad;
  const int ixp = x.id;
  const int id = static_cast<int>(tape.size());
  std::function<void(Tape<Real>&)> bwd;
  if (req) {
    bwd = [=](Tape<Real>& t) {
      const Tensor<Real>& g = t.node(id).grad;
      Tensor<Real> dx({B, C, H, W});
      for (int s = 0; s < B * C; ++s) {
        const Real* gp = g.data.data() + static_cast<std::int64_t>(s) * Ho * Wo;
        Real* dp = dx.data.data() + static_cast<std::int64_t>(s) * H * W;
        for (int ho = 0; ho < Ho; ++ho)
          for (int wo = 0; wo < Wo; ++wo) {
            const Real gv = Real(0.25) * gp[ho * Wo + wo];
            dp[(2 * ho) * W + 2 * wo] += gv;
            dp[(2 * ho) * W + 2 * wo + 1] += gv;
            dp[(2 * ho + 1) * W + 2 * wo] += gv;
            dp[(2 * ho + 1) * W + 2 * wo + 1] += gv;
          }
      }
      t.accum_data(ixp, dx.data);
    };
  }
  return tape.custom(std::move(out), req, std::move(bwd));
}

}  // namespace nerfgan
