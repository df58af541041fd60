// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nerfgan/tensor.hpp"

namespace nerfgan {

template <class Real>
Real stable_softplus(Real x) {
  return x > Real(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class Real>
Real stable_sigmoid(Real x) {
  if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

/// Reverse-mode autodiff tape over Tensor<Real>.
///
/// Nodes are created in topological order by the op builders below and the
/// backward sweep walks them in reverse creation order. Every op is
/// sequential and allocation-order deterministic, which is what makes
/// training runs bit-replayable. Tapes are cheap, single-use objects: build,
/// call backward once, read gradients, discard.
template <class Real>
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Var leaf(Tensor<Real> value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var constant(Tensor<Real> value) { return leaf(std::move(value), false); }
  Var constant_scalar(Real v) { return constant(Tensor<Real>::scalar(v)); }

  const Tensor<Real>& val(Var v) const { return nodes_.at(v.id).value; }
  const Tensor<Real>& grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.numel() == 0) throw std::runtime_error("Tape::grad: no gradient at node");
    return n.grad;
  }
  bool has_grad(Var v) const { return nodes_.at(v.id).grad.numel() != 0; }
  std::size_t size() const { return nodes_.size(); }

  void backward(Var root) {
    Node& r = nodes_.at(root.id);
    if (r.value.numel() != 1) throw std::runtime_error("Tape::backward: root must be scalar");
    ensure_grad(root.id);
    nodes_[root.id].grad.data[0] = Real(1);
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.numel() != 0 && n.backward) n.backward(*this);
    }
  }

  // ---- elementwise ----

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Tensor<Real> out = val(a);
    out.data += val(b).data;
    return unary_or_binary(std::move(out), a, b, [](Tape& t, int ia, int ib, const Tensor<Real>& g, const Tensor<Real>&) {
      t.accum_data(ia, g.data);
      t.accum_data(ib, g.data);
    });
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Tensor<Real> out = val(a);
    out.data -= val(b).data;
    return unary_or_binary(std::move(out), a, b, [](Tape& t, int ia, int ib, const Tensor<Real>& g, const Tensor<Real>&) {
      t.accum_data(ia, g.data);
      t.accum_data(ib, -g.data);
    });
  }

  Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Tensor<Real> out = val(a);
    out.data *= val(b).data;
    return unary_or_binary(std::move(out), a, b, [](Tape& t, int ia, int ib, const Tensor<Real>& g, const Tensor<Real>&) {
      t.accum_data(ia, g.data * t.nodes_[ib].value.data);
      t.accum_data(ib, g.data * t.nodes_[ia].value.data);
    });
  }

  Var div(Var a, Var b) {
    check_same_shape(a, b, "div");
    Tensor<Real> out = val(a);
    out.data /= val(b).data;
    return unary_or_binary(std::move(out), a, b, [](Tape& t, int ia, int ib, const Tensor<Real>& g, const Tensor<Real>&) {
      const auto& bv = t.nodes_[ib].value.data;
      t.accum_data(ia, g.data / bv);
      t.accum_data(ib, -g.data * t.nodes_[ia].value.data / (bv * bv));
    });
  }

  Var mul_scalar(Var a, Real s) {
    Tensor<Real> out = val(a);
    out.data *= s;
    return unary(std::move(out), a,
                 [s](Tape& t, int ia, const Tensor<Real>& g) { t.accum_data(ia, g.data * s); });
  }

  Var add_scalar(Var a, Real s) {
    Tensor<Real> out = val(a);
    out.data += s;
    return unary(std::move(out), a,
                 [](Tape& t, int ia, const Tensor<Real>& g) { t.accum_data(ia, g.data); });
  }

  /// k * a + c
  Var affine(Var a, Real k, Real c) {
    Tensor<Real> out = val(a);
    out.data = out.data * k + c;
    return unary(std::move(out), a,
                 [k](Tape& t, int ia, const Tensor<Real>& g) { t.accum_data(ia, g.data * k); });
  }

  Var square(Var a) {
    Tensor<Real> out = val(a);
    out.data *= out.data;
    return unary(std::move(out), a, [](Tape& t, int ia, const Tensor<Real>& g) {
      t.accum_data(ia, g.data * Real(2) * t.nodes_[ia].value.data);
    });
  }

  Var sin_(Var a) {
    Tensor<Real> out = val(a);
    out.data = out.data.sin();
    return unary(std::move(out), a, [](Tape& t, int ia, const Tensor<Real>& g) {
      t.accum_data(ia, g.data * t.nodes_[ia].value.data.cos());
    });
  }

  Var cos_(Var a) {
    Tensor<Real> out = val(a);
    out.data = out.data.cos();
    return unary(std::move(out), a, [](Tape& t, int ia, const Tensor<Real>& g) {
      t.accum_data(ia, -g.data * t.nodes_[ia].value.data.sin());
    });
  }

  Var exp_(Var a) {
    Tensor<Real> out = val(a);
    out.data = out.data.exp();
    const int out_id = static_cast<int>(nodes_.size());
    return unary(std::move(out), a, [out_id](Tape& t, int ia, const Tensor<Real>& g) {
      t.accum_data(ia, g.data * t.nodes_[out_id].value.data);
    });
  }

  Var log_(Var a) {
    Tensor<Real> out = val(a);
    out.data = out.data.log();
    return unary(std::move(out), a, [](Tape& t, int ia, const Tensor<Real>& g) {
      t.accum_data(ia, g.data / t.nodes_[ia].value.data);
    });
  }

  Var tanh_(Var a) {
    Tensor<Real> out = val(a);
    out.data = out.data.tanh();
    const int out_id = static_cast<int>(nodes_.size());
    return unary(std::move(out), a, [out_id](Tape& t, int ia, const Tensor<Real>& g) {
      const auto& y = t.nodes_[out_id].value.data;
      t.accum_data(ia, g.data * (Real(1) - y * y));
    });
  }

  Var sigmoid(Var a) {
    Tensor<Real> out = val(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] = stable_sigmoid(out.data[i]);
    const int out_id = static_cast<int>(nodes_.size());
    return unary(std::move(out), a, [out_id](Tape& t, int ia, const Tensor<Real>& g) {
      const auto& y = t.nodes_[out_id].value.data;
      t.accum_data(ia, g.data * y * (Real(1) - y));
    });
  }

  Var softplus(Var a) {
    Tensor<Real> out = val(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] = stable_softplus(out.data[i]);
    return unary(std::move(out), a, [](Tape& t, int ia, const Tensor<Real>& g) {
      const auto& x = t.nodes_[ia].value.data;
      ArrX<Real> d(x.size());
      for (std::int64_t i = 0; i < x.size(); ++i) d[i] = stable_sigmoid(x[i]);
      t.accum_data(ia, g.data * d);
    });
  }

  Var leaky_relu(Var a, Real slope) {
    Tensor<Real> out = val(a);
    out.data = out.data.max(out.data * slope);
    return unary(std::move(out), a, [slope](Tape& t, int ia, const Tensor<Real>& g) {
      const auto& x = t.nodes_[ia].value.data;
      t.accum_data(ia, g.data * (x > Real(0)).select(ArrX<Real>::Constant(x.size(), Real(1)),
                                                     ArrX<Real>::Constant(x.size(), slope)));
    });
  }

  Var rsqrt(Var a) {
    Tensor<Real> out = val(a);
    out.data = out.data.rsqrt();
    const int out_id = static_cast<int>(nodes_.size());
    return unary(std::move(out), a, [out_id](Tape& t, int ia, const Tensor<Real>& g) {
      const auto& y = t.nodes_[out_id].value.data;  // y = x^{-1/2}; dy/dx = -y^3/2
      t.accum_data(ia, g.data * Real(-0.5) * y * y * y);
    });
  }

  // ---- broadcasting helpers ----

  /// Tile a [1,m] row vector to [n,m].
  Var row_tile(Var v, int n) {
    const Tensor<Real>& t = val(v);
    if (t.rows() != 1) throw std::runtime_error("row_tile: expected single row");
    const int m = t.cols();
    Tensor<Real> out({n, m});
    out.mat() = t.mat(1, m).replicate(n, 1);
    return unary(std::move(out), v, [n, m](Tape& tp, int iv, const Tensor<Real>& g) {
      ArrX<Real> acc(m);
      Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(acc.data(), 1, m) =
          g.mat(n, m).colwise().sum();
      tp.accum_data(iv, acc);
    });
  }

  /// x[n,m] * v[1,m] broadcast over rows.
  Var mul_rowvec(Var x, Var v) {
    const int n = val(x).rows(), m = val(x).cols();
    if (val(v).numel() != m) throw std::runtime_error("mul_rowvec: size mismatch");
    Tensor<Real> out = val(x);
    out.mat(n, m).array().rowwise() *= val(v).mat(1, m).array().row(0);
    return unary_or_binary(std::move(out), x, v, [n, m](Tape& t, int ix, int iv, const Tensor<Real>& g, const Tensor<Real>&) {
      const auto gv = g.mat(n, m);
      const auto xv = t.nodes_[ix].value.mat(n, m);
      const auto vv = t.nodes_[iv].value.mat(1, m);
      {
        Tensor<Real> dx({n, m});
        dx.mat(n, m) = gv.array().rowwise() * vv.array().row(0);
        t.accum_data(ix, dx.data);
      }
      {
        Tensor<Real> dv({1, m});
        dv.mat(1, m) = (gv.array() * xv.array()).colwise().sum();
        t.accum_data(iv, dv.data);
      }
    });
  }

  Var add_rowvec(Var x, Var v) {
    const int n = val(x).rows(), m = val(x).cols();
    if (val(v).numel() != m) throw std::runtime_error("add_rowvec: size mismatch");
    Tensor<Real> out = val(x);
    out.mat(n, m).array().rowwise() += val(v).mat(1, m).array().row(0);
    return unary_or_binary(std::move(out), x, v, [n, m](Tape& t, int ix, int iv, const Tensor<Real>& g, const Tensor<Real>&) {
      t.accum_data(ix, g.data);
      Tensor<Real> dv({1, m});
      dv.mat(1, m) = g.mat(n, m).colwise().sum();
      t.accum_data(iv, dv.data);
    });
  }

  /// x[n,m] * v[n,1] broadcast over columns.
  Var mul_colvec(Var x, Var v) {
    const int n = val(x).rows(), m = val(x).cols();
    if (val(v).numel() != n) throw std::runtime_error("mul_colvec: size mismatch");
    Tensor<Real> out = val(x);
    out.mat(n, m).array().colwise() *= val(v).mat(n, 1).array().col(0);
    return unary_or_binary(std::move(out), x, v, [n, m](Tape& t, int ix, int iv, const Tensor<Real>& g, const Tensor<Real>&) {
      const auto gv = g.mat(n, m);
      const auto xv = t.nodes_[ix].value.mat(n, m);
      const auto vv = t.nodes_[iv].value.mat(n, 1);
      {
        Tensor<Real> dx({n, m});
        dx.mat(n, m) = gv.array().colwise() * vv.array().col(0);
        t.accum_data(ix, dx.data);
      }
      {
        Tensor<Real> dv({n, 1});
        dv.mat(n, 1) = (gv.array() * xv.array()).rowwise().sum();
        t.accum_data(iv, dv.data);
      }
    });
  }

  // ---- linear algebra ----

  /// y = x * W^T + b with x:[n,i], W:[o,i], b:[o].
  Var linear(Var x, Var W, Var b) {
    const int n = val(x).rows(), in = val(x).cols();
    const int out_dim = val(W).rows();
    if (val(W).cols() != in) throw std::runtime_error("linear: weight/input mismatch");
    if (val(b).numel() != out_dim) throw std::runtime_error("linear: bias size mismatch");
    Tensor<Real> out({n, out_dim});
    out.mat() = val(x).mat() * val(W).mat().transpose();
    out.mat().array().rowwise() += val(b).mat(1, out_dim).array().row(0);
    Node node;
    node.value = std::move(out);
    node.requires_grad = needs_grad(x) || needs_grad(W) || needs_grad(b);
    const int ix = x.id, iw = W.id, ib = b.id;
    const int id = static_cast<int>(nodes_.size());
    if (node.requires_grad) {
      node.backward = [ix, iw, ib, id, n, in, out_dim](Tape& t) {
        const auto g = t.nodes_[id].grad.mat(n, out_dim);
        if (t.requires_id(ix)) {
          Tensor<Real> dx({n, in});
          dx.mat() = g * t.nodes_[iw].value.mat();
          t.accum_data(ix, dx.data);
        }
        if (t.requires_id(iw)) {
          Tensor<Real> dw({out_dim, in});
          dw.mat() = g.transpose() * t.nodes_[ix].value.mat(n, in);
          t.accum_data(iw, dw.data);
        }
        if (t.requires_id(ib)) {
          Tensor<Real> db({out_dim});
          Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(db.data.data(), 1, out_dim) =
              g.colwise().sum();
          t.accum_data(ib, db.data);
        }
      };
    }
    nodes_.push_back(std::move(node));
    return Var{id};
  }

  Var matmul(Var a, Var b) {
    const int m = val(a).rows(), k = val(a).cols(), n = val(b).cols();
    if (val(b).rows() != k) throw std::runtime_error("matmul: inner dim mismatch");
    Tensor<Real> out({m, n});
    out.mat() = val(a).mat() * val(b).mat();
    return unary_or_binary(std::move(out), a, b, [m, k, n](Tape& t, int ia, int ib, const Tensor<Real>& g, const Tensor<Real>&) {
      const auto gv = g.mat(m, n);
      if (t.requires_id(ia)) {
        Tensor<Real> da({m, k});
        da.mat() = gv * t.nodes_[ib].value.mat(k, n).transpose();
        t.accum_data(ia, da.data);
      }
      if (t.requires_id(ib)) {
        Tensor<Real> db({k, n});
        db.mat() = t.nodes_[ia].value.mat(m, k).transpose() * gv;
        t.accum_data(ib, db.data);
      }
    });
  }

  Var transpose(Var a) {
    const int m = val(a).rows(), n = val(a).cols();
    Tensor<Real> out({n, m});
    out.mat() = val(a).mat(m, n).transpose();
    return unary(std::move(out), a, [m, n](Tape& t, int ia, const Tensor<Real>& g) {
      Tensor<Real> da({m, n});
      da.mat() = g.mat(n, m).transpose();
      t.accum_data(ia, da.data);
    });
  }

  /// FiLM modulation with per-block parameters: rows of x are grouped into
  /// contiguous blocks of `rows_per_block`; block b is scaled by gamma[b,:]
  /// and shifted by beta[b,:].
  Var film(Var x, Var gamma, Var beta, int rows_per_block) {
    const int n = val(x).rows(), w = val(x).cols();
    const int blocks = val(gamma).rows();
    if (n != blocks * rows_per_block || val(gamma).cols() != w || !val(gamma).same_shape(val(beta)))
      throw std::runtime_error("film: shape mismatch");
    Tensor<Real> out = val(x);
    auto ov = out.mat(n, w);
    const auto gm = val(gamma).mat(blocks, w);
    const auto bm = val(beta).mat(blocks, w);
    for (int b = 0; b < blocks; ++b) {
      auto blk = ov.middleRows(b * rows_per_block, rows_per_block);
      blk = (blk.array().rowwise() * gm.array().row(b)).rowwise() + bm.array().row(b);
    }
    Node node;
    node.value = std::move(out);
    node.requires_grad = needs_grad(x) || needs_grad(gamma) || needs_grad(beta);
    const int ix = x.id, ig = gamma.id, ibt = beta.id;
    const int id = static_cast<int>(nodes_.size());
    if (node.requires_grad) {
      node.backward = [ix, ig, ibt, id, n, w, blocks, rows_per_block](Tape& t) {
        const auto g = t.nodes_[id].grad.mat(n, w);
        const auto xv = t.nodes_[ix].value.mat(n, w);
        const auto gm = t.nodes_[ig].value.mat(blocks, w);
        if (t.requires_id(ix)) {
          Tensor<Real> dx({n, w});
          auto dxv = dx.mat(n, w);
          for (int b = 0; b < blocks; ++b)
            dxv.middleRows(b * rows_per_block, rows_per_block) =
                g.middleRows(b * rows_per_block, rows_per_block).array().rowwise() * gm.array().row(b);
          t.accum_data(ix, dx.data);
        }
        if (t.requires_id(ig)) {
          Tensor<Real> dg({blocks, w});
          auto dgv = dg.mat(blocks, w);
          for (int b = 0; b < blocks; ++b)
            dgv.row(b) = (g.middleRows(b * rows_per_block, rows_per_block).array() *
                          xv.middleRows(b * rows_per_block, rows_per_block).array())
                             .colwise()
                             .sum();
          t.accum_data(ig, dg.data);
        }
        if (t.requires_id(ibt)) {
          Tensor<Real> db({blocks, w});
          auto dbv = db.mat(blocks, w);
          for (int b = 0; b < blocks; ++b)
            dbv.row(b) = g.middleRows(b * rows_per_block, rows_per_block).colwise().sum();
          t.accum_data(ibt, db.data);
        }
      };
    }
    nodes_.push_back(std::move(node));
    return Var{id};
  }

  // ---- shape ops ----

  Var reshape(Var a, std::vector<int> new_shape) {
    if (Tensor<Real>::numel_of(new_shape) != val(a).numel())
      throw std::runtime_error("reshape: numel mismatch");
    Tensor<Real> out(new_shape, val(a).data);
    return unary(std::move(out), a,
                 [](Tape& t, int ia, const Tensor<Real>& g) { t.accum_data(ia, g.data); });
  }

  Var slice_cols(Var a, int c0, int c1) {
    const int n = val(a).rows(), m = val(a).cols();
    if (c0 < 0 || c1 > m || c0 >= c1) throw std::runtime_error("slice_cols: bad range");
    Tensor<Real> out({n, c1 - c0});
    out.mat() = val(a).mat(n, m).middleCols(c0, c1 - c0);
    return unary(std::move(out), a, [n, m, c0, c1](Tape& t, int ia, const Tensor<Real>& g) {
      Tensor<Real> da({n, m});
      da.mat(n, m).middleCols(c0, c1 - c0) = g.mat(n, c1 - c0);
      t.accum_data(ia, da.data);
    });
  }

  Var slice_rows(Var a, int r0, int r1) {
    const int n = val(a).rows(), m = val(a).cols();
    if (r0 < 0 || r1 > n || r0 >= r1) throw std::runtime_error("slice_rows: bad range");
    Tensor<Real> out({r1 - r0, m});
    out.mat() = val(a).mat(n, m).middleRows(r0, r1 - r0);
    return unary(std::move(out), a, [n, m, r0, r1](Tape& t, int ia, const Tensor<Real>& g) {
      Tensor<Real> da({n, m});
      da.mat(n, m).middleRows(r0, r1 - r0) = g.mat(r1 - r0, m);
      t.accum_data(ia, da.data);
    });
  }

  Var concat_cols(Var a, Var b) {
    const int n = val(a).rows();
    if (val(b).rows() != n) throw std::runtime_error("concat_cols: row mismatch");
    const int ma = val(a).cols(), mb = val(b).cols();
    Tensor<Real> out({n, ma + mb});
    out.mat().leftCols(ma) = val(a).mat(n, ma);
    out.mat().rightCols(mb) = val(b).mat(n, mb);
    return unary_or_binary(std::move(out), a, b, [n, ma, mb](Tape& t, int ia, int ib, const Tensor<Real>& g, const Tensor<Real>&) {
      const auto gv = g.mat(n, ma + mb);
      Tensor<Real> da({n, ma});
      da.mat() = gv.leftCols(ma);
      t.accum_data(ia, da.data);
      Tensor<Real> db({n, mb});
      db.mat() = gv.rightCols(mb);
      t.accum_data(ib, db.data);
    });
  }

  /// Stack k same-shape tensors along a new leading axis.
  Var stack(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::runtime_error("stack: empty");
    const std::int64_t part_numel = val(parts[0]).numel();
    std::vector<int> shape;
    shape.push_back(static_cast<int>(parts.size()));
    for (int d : val(parts[0]).shape) shape.push_back(d);
    Tensor<Real> out(shape);
    bool req = false;
    std::vector<int> ids;
    ids.reserve(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (val(parts[i]).numel() != part_numel) throw std::runtime_error("stack: shape mismatch");
      out.data.segment(static_cast<std::int64_t>(i) * part_numel, part_numel) = val(parts[i]).data;
      req = req || needs_grad(parts[i]);
      ids.push_back(parts[i].id);
    }
    Node node;
    node.value = std::move(out);
    node.requires_grad = req;
    const int id = static_cast<int>(nodes_.size());
    if (req) {
      node.backward = [ids, id, part_numel](Tape& t) {
        const auto& g = t.nodes_[id].grad.data;
        for (std::size_t i = 0; i < ids.size(); ++i)
          t.accum_data(ids[i], g.segment(static_cast<std::int64_t>(i) * part_numel, part_numel));
      };
    }
    nodes_.push_back(std::move(node));
    return Var{id};
  }

  /// Repeat each row k times (consecutively): [n,m] -> [n*k,m].
  Var repeat_rows(Var a, int k) {
    const int n = val(a).rows(), m = val(a).cols();
    Tensor<Real> out({n * k, m});
    {
      auto ov = out.mat(n * k, m);
      const auto av = val(a).mat(n, m);
      for (int r = 0; r < n; ++r) ov.middleRows(r * k, k).rowwise() = av.row(r);
    }
    return unary(std::move(out), a, [n, m, k](Tape& t, int ia, const Tensor<Real>& g) {
      Tensor<Real> da({n, m});
      auto dv = da.mat(n, m);
      const auto gv = g.mat(n * k, m);
      for (int r = 0; r < n; ++r) dv.row(r) = gv.middleRows(r * k, k).colwise().sum();
      t.accum_data(ia, da.data);
    });
  }

  // ---- reductions ----

  Var sum_rows(Var a) {
    const int n = val(a).rows(), m = val(a).cols();
    Tensor<Real> out({n, 1});
    out.mat() = val(a).mat(n, m).rowwise().sum();
    return unary(std::move(out), a, [n, m](Tape& t, int ia, const Tensor<Real>& g) {
      Tensor<Real> da({n, m});
      da.mat().array().colwise() = g.mat(n, 1).array().col(0);
      t.accum_data(ia, da.data);
    });
  }

  Var sum_all(Var a) {
    Tensor<Real> out = Tensor<Real>::scalar(val(a).data.sum());
    return unary(std::move(out), a, [](Tape& t, int ia, const Tensor<Real>& g) {
      t.accum_data(ia, ArrX<Real>::Constant(t.nodes_[ia].value.numel(), g.data[0]));
    });
  }

  Var mean_all(Var a) {
    const Real inv = Real(1) / static_cast<Real>(val(a).numel());
    Tensor<Real> out = Tensor<Real>::scalar(val(a).data.sum() * inv);
    return unary(std::move(out), a, [inv](Tape& t, int ia, const Tensor<Real>& g) {
      t.accum_data(ia, ArrX<Real>::Constant(t.nodes_[ia].value.numel(), g.data[0] * inv));
    });
  }

  // ---- fused losses ----

  /// mean((a - b)^2) over all elements.
  Var mse(Var a, Var b) { return mean_all(square(sub(a, b))); }

 private:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
  };

  bool needs_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_id(int id) const { return nodes_[id].requires_grad; }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (!val(a).same_shape(val(b)))
      throw std::runtime_error(std::string(op) + ": shape mismatch " + shape_string(val(a).shape) +
                               " vs " + shape_string(val(b).shape));
  }

  void ensure_grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.numel() == 0) {
      n.grad.shape = n.value.shape;
      n.grad.data.setZero(n.value.numel());
    }
  }

 public:
  // Accumulate `g` into the gradient of node `id` (no-op for non-grad nodes).
  // Public so that op backward lambdas and fused ops in other headers can use it.
  template <class Expr>
  void accum_data(int id, const Expr& g) {
    if (!nodes_[id].requires_grad) return;
    ensure_grad(id);
    nodes_[id].grad.data += g;
  }

  Node& node(int id) { return nodes_[id]; }

  template <class Fn>
  Var unary(Tensor<Real> out, Var a, Fn&& fn) {
    Node node;
    node.value = std::move(out);
    node.requires_grad = needs_grad(a);
    const int ia = a.id;
    const int id = static_cast<int>(nodes_.size());
    if (node.requires_grad) {
      node.backward = [ia, id, fn = std::forward<Fn>(fn)](Tape& t) {
        fn(t, ia, t.nodes_[id].grad);
      };
    }
    nodes_.push_back(std::move(node));
    return Var{id};
  }

  template <class Fn>
  Var unary_or_binary(Tensor<Real> out, Var a, Var b, Fn&& fn) {
    Node node;
    node.value = std::move(out);
    node.requires_grad = needs_grad(a) || needs_grad(b);
    const int ia = a.id, ib = b.id;
    const int id = static_cast<int>(nodes_.size());
    if (node.requires_grad) {
      node.backward = [ia, ib, id, fn = std::forward<Fn>(fn)](Tape& t) {
        fn(t, ia, ib, t.nodes_[id].grad, t.nodes_[id].value);
      };
    }
    nodes_.push_back(std::move(node));
    return Var{id};
  }

  // Create a node with a custom backward; used by fused ops (conv, composite).
  Var custom(Tensor<Real> out, bool requires_grad, std::function<void(Tape&)> backward) {
    Node node;
    node.value = std::move(out);
    node.requires_grad = requires_grad;
    if (requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<Real>& grad_ref(int id) { return nodes_[id].grad; }

 private:
  std::vector<Node> nodes_;
};

}  // namespace nerfgan
