#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "demoire/graph.hpp"

namespace demoire {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

// Patch matrix for one sample: (OH*OW) x (IC*KH*KW), column q = (ic*KH+ki)*KW+kj,
// row r = oh*OW+ow. Out-of-range reads (zero padding) yield 0.
template <typename Scalar>
void im2col(const Tensor<Scalar>& x, Index n, Index kh, Index kw, Index stride, Index pad,
            Index oh_count, Index ow_count, MatrixX<Scalar>& pt) {
  const Index ic_count = x.c(), h = x.h(), w = x.w();
  pt.resize(oh_count * ow_count, ic_count * kh * kw);
  for (Index ic = 0; ic < ic_count; ++ic) {
    for (Index ki = 0; ki < kh; ++ki) {
      for (Index kj = 0; kj < kw; ++kj) {
        const Index q = (ic * kh + ki) * kw + kj;
        Scalar* col = pt.data() + q * pt.rows();
        for (Index oh = 0; oh < oh_count; ++oh) {
          const Index ih = oh * stride + ki - pad;
          const bool row_ok = ih >= 0 && ih < h;
          for (Index ow = 0; ow < ow_count; ++ow) {
            const Index iw = ow * stride + kj - pad;
            col[oh * ow_count + ow] =
                (row_ok && iw >= 0 && iw < w) ? x(n, ic, ih, iw) : Scalar(0);
          }
        }
      }
    }
  }
}

// Scatter-add of a patch-matrix gradient back into the input gradient.
template <typename Scalar>
void col2im_add(const MatrixX<Scalar>& dpt, Tensor<Scalar>& dx, Index n, Index kh, Index kw,
                Index stride, Index pad, Index oh_count, Index ow_count) {
  const Index ic_count = dx.c(), h = dx.h(), w = dx.w();
  for (Index ic = 0; ic < ic_count; ++ic) {
    for (Index ki = 0; ki < kh; ++ki) {
      for (Index kj = 0; kj < kw; ++kj) {
        const Index q = (ic * kh + ki) * kw + kj;
        const Scalar* col = dpt.data() + q * dpt.rows();
        for (Index oh = 0; oh < oh_count; ++oh) {
          const Index ih = oh * stride + ki - pad;
          if (ih < 0 || ih >= h) continue;
          for (Index ow = 0; ow < ow_count; ++ow) {
            const Index iw = ow * stride + kj - pad;
            if (iw < 0 || iw >= w) continue;
            dx(n, ic, ih, iw) += col[oh * ow_count + ow];
          }
        }
      }
    }
  }
}

// Weight tensor (OC,IC,KH,KW) as a (IC*KH*KW) x OC matrix.
template <typename Scalar>
MatrixX<Scalar> weights_as_matrix(const Tensor<Scalar>& w) {
  const Index oc = w.n(), q_count = w.c() * w.h() * w.w();
  MatrixX<Scalar> wt(q_count, oc);
  for (Index o = 0; o < oc; ++o) {
    for (Index q = 0; q < q_count; ++q) wt(q, o) = w.data()[o * q_count + q];
  }
  return wt;
}

}  // namespace detail

/// 2D convolution with zero padding. Weights are (OC, IC, KH, KW), bias is
/// (1, OC, 1, 1). pad < 0 selects "same" padding (KH-1)/2 for stride 1.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b,
                   Index stride = 1, Index pad = -1) {
  const Shape4 xs = x.shape(), ws = w.shape(), bs = b.shape();
  if (ws.c != xs.c) {
    throw ShapeError("conv2d: weight expects " + std::to_string(ws.c) +
                     " input channels, feature map has " + std::to_string(xs.c));
  }
  if (!(bs == Shape4{1, ws.n, 1, 1})) {
    throw ShapeError("conv2d: bias shape " + bs.str() + " does not match " +
                      std::to_string(ws.n) + " output channels");
  }
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (pad < 0) pad = (ws.h - 1) / 2;
  const Index oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const Index ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  if (xs.h + 2 * pad < ws.h || xs.w + 2 * pad < ws.w) {
    throw ShapeError("conv2d: input " + xs.str() + " smaller than kernel " +
                     std::to_string(ws.h) + "x" + std::to_string(ws.w));
  }

  Tensor<Scalar> out(xs.n, ws.n, oh, ow);
  MatrixX<Scalar> wt = detail::weights_as_matrix(w.value());
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> bias(b.value().data(), ws.n);
  MatrixX<Scalar> pt;
  for (Index n = 0; n < xs.n; ++n) {
    detail::im2col(x.value(), n, ws.h, ws.w, stride, pad, oh, ow, pt);
    Eigen::Map<MatrixX<Scalar>> out_m(out.data() + n * ws.n * oh * ow, oh * ow, ws.n);
    out_m.noalias() = pt * wt;
    out_m.rowwise() += bias.transpose();
  }

  Node<Scalar>* xn = x.node_.get();
  Node<Scalar>* wn = w.node_.get();
  Node<Scalar>* bn = b.node_.get();
  const Index kh = ws.h, kw = ws.w, oc = ws.n;
  return make_op<Scalar>(
      std::move(out), {x, w, b}, [=](Node<Scalar>& self) {
        const Index batch = xn->value.n();
        MatrixX<Scalar> wt_b;
        if (xn->requires_grad) wt_b = detail::weights_as_matrix(wn->value);
        MatrixX<Scalar> dwt;
        if (wn->requires_grad) dwt = MatrixX<Scalar>::Zero(xn->value.c() * kh * kw, oc);
        MatrixX<Scalar> pt_b, dpt;
        for (Index n = 0; n < batch; ++n) {
          Eigen::Map<const MatrixX<Scalar>> g_m(self.grad.data() + n * oc * oh * ow,
                                                oh * ow, oc);
          if (bn->requires_grad) {
            Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> db(
                bn->ensure_grad().data(), oc);
            db.noalias() += g_m.colwise().sum().transpose();
          }
          if (wn->requires_grad) {
            detail::im2col(xn->value, n, kh, kw, stride, pad, oh, ow, pt_b);
            dwt.noalias() += pt_b.transpose() * g_m;
          }
          if (xn->requires_grad) {
            dpt.noalias() = g_m * wt_b.transpose();
            detail::col2im_add(dpt, xn->ensure_grad(), n, kh, kw, stride, pad, oh, ow);
          }
        }
        if (wn->requires_grad) {
          Tensor<Scalar>& dw = wn->ensure_grad();
          const Index q_count = dwt.rows();
          for (Index o = 0; o < oc; ++o) {
            for (Index q = 0; q < q_count; ++q) dw.data()[o * q_count + q] += dwt(q, o);
          }
        }
      });
}

/// Mirror padding without edge repetition (index -1 maps to 1). Requires
/// pad <= dim-1 on each axis.
template <typename Scalar>
Var<Scalar> reflect_pad(const Var<Scalar>& x, Index ph, Index pw) {
  const Shape4 s = x.shape();
  if (ph < 0 || pw < 0) throw std::invalid_argument("reflect_pad: negative pad");
  if (ph > s.h - 1 || pw > s.w - 1) {
    throw ShapeError("reflect_pad: pad (" + std::to_string(ph) + "," + std::to_string(pw) +
                     ") too large for " + s.str());
  }
  auto mirror = [](Index j, Index dim) {
    if (j < 0) return -j;
    if (j >= dim) return 2 * dim - 2 - j;
    return j;
  };
  auto src_h = std::make_shared<std::vector<Index>>(s.h + 2 * ph);
  auto src_w = std::make_shared<std::vector<Index>>(s.w + 2 * pw);
  for (Index i = 0; i < (Index)src_h->size(); ++i) (*src_h)[i] = mirror(i - ph, s.h);
  for (Index i = 0; i < (Index)src_w->size(); ++i) (*src_w)[i] = mirror(i - pw, s.w);

  Tensor<Scalar> out(s.n, s.c, s.h + 2 * ph, s.w + 2 * pw);
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c)
      for (Index i = 0; i < out.h(); ++i)
        for (Index j = 0; j < out.w(); ++j)
          out(n, c, i, j) = x.value()(n, c, (*src_h)[i], (*src_w)[j]);

  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, src_h, src_w](Node<Scalar>& self) {
    Tensor<Scalar>& dx = xn->ensure_grad();
    const Shape4 os = self.value.shape();
    for (Index n = 0; n < os.n; ++n)
      for (Index c = 0; c < os.c; ++c)
        for (Index i = 0; i < os.h; ++i)
          for (Index j = 0; j < os.w; ++j)
            dx(n, c, (*src_h)[i], (*src_w)[j]) += self.grad(n, c, i, j);
  });
}

/// Valid correlation of every channel with each kernel of a fixed (constant)
/// bank. Output channels are bank-major: out channel m*C + c holds kernel m
/// applied to input channel c.
template <typename Scalar>
Var<Scalar> fixed_filter_valid(const Var<Scalar>& x, std::vector<MatrixX<Scalar>> bank) {
  if (bank.empty()) throw std::invalid_argument("fixed_filter_valid: empty bank");
  const Index kh = bank[0].rows(), kw = bank[0].cols();
  for (const auto& k : bank) {
    if (k.rows() != kh || k.cols() != kw) {
      throw std::invalid_argument("fixed_filter_valid: kernels differ in size");
    }
  }
  const Shape4 s = x.shape();
  if (s.h < kh || s.w < kw) {
    throw ShapeError("fixed_filter_valid: input " + s.str() + " smaller than kernel");
  }
  const Index oh = s.h - kh + 1, ow = s.w - kw + 1, m_count = (Index)bank.size();
  Tensor<Scalar> out = Tensor<Scalar>::zeros(s.n, m_count * s.c, oh, ow);
  for (Index n = 0; n < s.n; ++n) {
    for (Index m = 0; m < m_count; ++m) {
      const MatrixX<Scalar>& k = bank[m];
      for (Index c = 0; c < s.c; ++c) {
        for (Index i = 0; i < oh; ++i) {
          for (Index j = 0; j < ow; ++j) {
            Scalar acc = 0;
            for (Index ki = 0; ki < kh; ++ki)
              for (Index kj = 0; kj < kw; ++kj) acc += k(ki, kj) * x.value()(n, c, i + ki, j + kj);
            out(n, m * s.c + c, i, j) = acc;
          }
        }
      }
    }
  }
  auto bank_p = std::make_shared<std::vector<MatrixX<Scalar>>>(std::move(bank));
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, bank_p, kh, kw](Node<Scalar>& self) {
    Tensor<Scalar>& dx = xn->ensure_grad();
    const Index c_count = dx.c();
    const Shape4 os = self.value.shape();
    for (Index n = 0; n < os.n; ++n) {
      for (Index m = 0; m < (Index)bank_p->size(); ++m) {
        const MatrixX<Scalar>& k = (*bank_p)[m];
        for (Index c = 0; c < c_count; ++c) {
          for (Index i = 0; i < os.h; ++i) {
            for (Index j = 0; j < os.w; ++j) {
              const Scalar g = self.grad(n, m * c_count + c, i, j);
              if (g == Scalar(0)) continue;
              for (Index ki = 0; ki < kh; ++ki)
                for (Index kj = 0; kj < kw; ++kj) dx(n, c, i + ki, j + kj) += g * k(ki, kj);
            }
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Pooling and channel statistics
// ---------------------------------------------------------------------------

/// Global spatial average pooling, N x C x H x W -> N x C x 1 x 1.
template <typename Scalar>
Var<Scalar> spatial_mean(const Var<Scalar>& x) {
  const Shape4 s = x.shape();
  Tensor<Scalar> out(s.n, s.c, 1, 1);
  const Scalar inv = Scalar(1) / Scalar(s.h * s.w);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      Scalar acc = 0;
      const Scalar* p = x.value().data() + x.value().offset(n, c, 0, 0);
      for (Index i = 0; i < s.h * s.w; ++i) acc += p[i];
      out(n, c, 0, 0) = acc * inv;
    }
  }
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, inv](Node<Scalar>& self) {
    Tensor<Scalar>& dx = xn->ensure_grad();
    const Shape4 s = dx.shape();
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < s.c; ++c) {
        const Scalar g = self.grad(n, c, 0, 0) * inv;
        Scalar* p = dx.data() + dx.offset(n, c, 0, 0);
        for (Index i = 0; i < s.h * s.w; ++i) p[i] += g;
      }
    }
  });
}

/// Global spatial max pooling; gradient routes to the first maximum.
template <typename Scalar>
Var<Scalar> spatial_max(const Var<Scalar>& x) {
  const Shape4 s = x.shape();
  Tensor<Scalar> out(s.n, s.c, 1, 1);
  auto argmax = std::make_shared<std::vector<Index>>(s.n * s.c);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      const Scalar* p = x.value().data() + x.value().offset(n, c, 0, 0);
      Index best = 0;
      for (Index i = 1; i < s.h * s.w; ++i) {
        if (p[i] > p[best]) best = i;
      }
      out(n, c, 0, 0) = p[best];
      (*argmax)[n * s.c + c] = best;
    }
  }
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, argmax](Node<Scalar>& self) {
    Tensor<Scalar>& dx = xn->ensure_grad();
    const Shape4 s = dx.shape();
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < s.c; ++c) {
        dx.data()[dx.offset(n, c, 0, 0) + (*argmax)[n * s.c + c]] += self.grad(n, c, 0, 0);
      }
    }
  });
}

/// Per-pixel mean over channels, N x C x H x W -> N x 1 x H x W.
template <typename Scalar>
Var<Scalar> channel_mean(const Var<Scalar>& x) {
  const Shape4 s = x.shape();
  Tensor<Scalar> out = Tensor<Scalar>::zeros(s.n, 1, s.h, s.w);
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c)
      for (Index i = 0; i < s.h; ++i)
        for (Index j = 0; j < s.w; ++j) out(n, 0, i, j) += x.value()(n, c, i, j);
  const Scalar inv = Scalar(1) / Scalar(s.c);
  out.array() *= inv;
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, inv](Node<Scalar>& self) {
    Tensor<Scalar>& dx = xn->ensure_grad();
    const Shape4 s = dx.shape();
    for (Index n = 0; n < s.n; ++n)
      for (Index c = 0; c < s.c; ++c)
        for (Index i = 0; i < s.h; ++i)
          for (Index j = 0; j < s.w; ++j) dx(n, c, i, j) += self.grad(n, 0, i, j) * inv;
  });
}

/// Per-pixel max over channels; gradient routes to the first maximal channel.
template <typename Scalar>
Var<Scalar> channel_max(const Var<Scalar>& x) {
  const Shape4 s = x.shape();
  Tensor<Scalar> out(s.n, 1, s.h, s.w);
  auto argmax = std::make_shared<std::vector<Index>>(s.n * s.h * s.w);
  for (Index n = 0; n < s.n; ++n) {
    for (Index i = 0; i < s.h; ++i) {
      for (Index j = 0; j < s.w; ++j) {
        Index best = 0;
        Scalar best_v = x.value()(n, 0, i, j);
        for (Index c = 1; c < s.c; ++c) {
          const Scalar v = x.value()(n, c, i, j);
          if (v > best_v) {
            best_v = v;
            best = c;
          }
        }
        out(n, 0, i, j) = best_v;
        (*argmax)[(n * s.h + i) * s.w + j] = best;
      }
    }
  }
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, argmax](Node<Scalar>& self) {
    Tensor<Scalar>& dx = xn->ensure_grad();
    const Shape4 s = dx.shape();
    for (Index n = 0; n < s.n; ++n)
      for (Index i = 0; i < s.h; ++i)
        for (Index j = 0; j < s.w; ++j)
          dx(n, (*argmax)[(n * s.h + i) * s.w + j], i, j) += self.grad(n, 0, i, j);
  });
}

// ---------------------------------------------------------------------------
// Broadcast scaling
// ---------------------------------------------------------------------------

/// x scaled per channel by g (N x C x 1 x 1).
template <typename Scalar>
Var<Scalar> scale_channels(const Var<Scalar>& x, const Var<Scalar>& g) {
  const Shape4 xs = x.shape(), gs = g.shape();
  if (!(gs == Shape4{xs.n, xs.c, 1, 1})) {
    throw ShapeError("scale_channels: gate " + gs.str() + " does not match " + xs.str());
  }
  Tensor<Scalar> out(xs);
  for (Index n = 0; n < xs.n; ++n) {
    for (Index c = 0; c < xs.c; ++c) {
      const Scalar gv = g.value()(n, c, 0, 0);
      const Scalar* src = x.value().data() + x.value().offset(n, c, 0, 0);
      Scalar* dst = out.data() + out.offset(n, c, 0, 0);
      for (Index i = 0; i < xs.h * xs.w; ++i) dst[i] = src[i] * gv;
    }
  }
  Node<Scalar>* xn = x.node_.get();
  Node<Scalar>* gn = g.node_.get();
  return make_op<Scalar>(std::move(out), {x, g}, [xn, gn](Node<Scalar>& self) {
    const Shape4 s = xn->value.shape();
    for (Index n = 0; n < s.n; ++n) {
      for (Index c = 0; c < s.c; ++c) {
        const Index base = xn->value.offset(n, c, 0, 0);
        if (xn->requires_grad) {
          const Scalar gv = gn->value(n, c, 0, 0);
          Tensor<Scalar>& dx = xn->ensure_grad();
          for (Index i = 0; i < s.h * s.w; ++i) dx.data()[base + i] += self.grad.data()[base + i] * gv;
        }
        if (gn->requires_grad) {
          Scalar acc = 0;
          for (Index i = 0; i < s.h * s.w; ++i)
            acc += self.grad.data()[base + i] * xn->value.data()[base + i];
          gn->ensure_grad()(n, c, 0, 0) += acc;
        }
      }
    }
  });
}

/// x scaled per pixel by s (N x 1 x H x W).
template <typename Scalar>
Var<Scalar> scale_spatial(const Var<Scalar>& x, const Var<Scalar>& s) {
  const Shape4 xs = x.shape(), ss = s.shape();
  if (!(ss == Shape4{xs.n, 1, xs.h, xs.w})) {
    throw ShapeError("scale_spatial: gate " + ss.str() + " does not match " + xs.str());
  }
  Tensor<Scalar> out(xs);
  for (Index n = 0; n < xs.n; ++n)
    for (Index c = 0; c < xs.c; ++c)
      for (Index i = 0; i < xs.h; ++i)
        for (Index j = 0; j < xs.w; ++j)
          out(n, c, i, j) = x.value()(n, c, i, j) * s.value()(n, 0, i, j);
  Node<Scalar>* xn = x.node_.get();
  Node<Scalar>* sn = s.node_.get();
  return make_op<Scalar>(std::move(out), {x, s}, [xn, sn](Node<Scalar>& self) {
    const Shape4 shp = xn->value.shape();
    for (Index n = 0; n < shp.n; ++n) {
      for (Index c = 0; c < shp.c; ++c) {
        for (Index i = 0; i < shp.h; ++i) {
          for (Index j = 0; j < shp.w; ++j) {
            const Scalar g = self.grad(n, c, i, j);
            if (xn->requires_grad) xn->ensure_grad()(n, c, i, j) += g * sn->value(n, 0, i, j);
            if (sn->requires_grad) sn->ensure_grad()(n, 0, i, j) += g * xn->value(n, c, i, j);
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Structure ops
// ---------------------------------------------------------------------------

/// Concatenate along the channel axis.
template <typename Scalar>
Var<Scalar> concat_channels(const std::vector<Var<Scalar>>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const Shape4 first = xs[0].shape();
  Index c_total = 0;
  for (const auto& x : xs) {
    const Shape4 s = x.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: incompatible " + s.str() + " vs " + first.str());
    }
    c_total += s.c;
  }
  Tensor<Scalar> out(first.n, c_total, first.h, first.w);
  const Index plane = first.h * first.w;
  for (Index n = 0; n < first.n; ++n) {
    Index c_off = 0;
    for (const auto& x : xs) {
      const Index c_count = x.shape().c;
      std::copy(x.value().data() + n * c_count * plane,
                x.value().data() + (n + 1) * c_count * plane,
                out.data() + (n * c_total + c_off) * plane);
      c_off += c_count;
    }
  }
  std::vector<Node<Scalar>*> pnodes;
  for (const auto& x : xs) pnodes.push_back(x.node_.get());
  return make_op<Scalar>(std::move(out), xs, [pnodes, plane, c_total](Node<Scalar>& self) {
    const Index batch = self.value.n();
    for (Index n = 0; n < batch; ++n) {
      Index c_off = 0;
      for (Node<Scalar>* p : pnodes) {
        const Index c_count = p->value.c();
        if (p->requires_grad) {
          Tensor<Scalar>& dx = p->ensure_grad();
          const Scalar* g = self.grad.data() + (n * c_total + c_off) * plane;
          Scalar* d = dx.data() + n * c_count * plane;
          for (Index i = 0; i < c_count * plane; ++i) d[i] += g[i];
        }
        c_off += c_count;
      }
    }
  });
}

/// Pure value form of the sub-pixel rearrangement:
/// out(n, c, h*r+i, w*r+j) = in(n, c*r^2 + i*r + j, h, w).
template <typename Scalar>
Tensor<Scalar> pixel_shuffle(const Tensor<Scalar>& x, Index r) {
  if (r < 1) throw std::invalid_argument("pixel_shuffle: upscale factor must be >= 1");
  const Shape4 s = x.shape();
  if (s.c % (r * r) != 0) {
    throw std::invalid_argument("pixel_shuffle: channel count " + std::to_string(s.c) +
                                " not divisible by r^2 = " + std::to_string(r * r));
  }
  const Index oc = s.c / (r * r);
  Tensor<Scalar> out(s.n, oc, s.h * r, s.w * r);
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < oc; ++c)
      for (Index h = 0; h < s.h; ++h)
        for (Index w = 0; w < s.w; ++w)
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < r; ++j)
              out(n, c, h * r + i, w * r + j) = x(n, c * r * r + i * r + j, h, w);
  return out;
}

/// Exact inverse of pixel_shuffle.
template <typename Scalar>
Tensor<Scalar> pixel_unshuffle(const Tensor<Scalar>& x, Index r) {
  if (r < 1) throw std::invalid_argument("pixel_unshuffle: factor must be >= 1");
  const Shape4 s = x.shape();
  if (s.h % r != 0 || s.w % r != 0) {
    throw std::invalid_argument("pixel_unshuffle: spatial dims not divisible by r");
  }
  Tensor<Scalar> out(s.n, s.c * r * r, s.h / r, s.w / r);
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c)
      for (Index h = 0; h < s.h / r; ++h)
        for (Index w = 0; w < s.w / r; ++w)
          for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < r; ++j)
              out(n, c * r * r + i * r + j, h, w) = x(n, c, h * r + i, w * r + j);
  return out;
}

template <typename Scalar>
Var<Scalar> pixel_shuffle(const Var<Scalar>& x, Index r) {
  Tensor<Scalar> out = pixel_shuffle(x.value(), r);
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, r](Node<Scalar>& self) {
    Tensor<Scalar> g = pixel_unshuffle(self.grad, r);
    xn->ensure_grad().array() += g.array();
  });
}

// ---------------------------------------------------------------------------
// Bilinear resize (half-pixel centers, clamped edges)
// ---------------------------------------------------------------------------

namespace detail {
struct BilinearTaps {
  std::vector<Index> i0, i1;
  std::vector<double> w0, w1;
};

inline BilinearTaps bilinear_taps(Index src, Index dst) {
  BilinearTaps t;
  t.i0.resize(dst);
  t.i1.resize(dst);
  t.w0.resize(dst);
  t.w1.resize(dst);
  const double scale = double(src) / double(dst);
  for (Index d = 0; d < dst; ++d) {
    double s = (double(d) + 0.5) * scale - 0.5;
    double f = std::floor(s);
    double frac = s - f;
    Index lo = (Index)f;
    Index hi = lo + 1;
    t.i0[d] = std::min(std::max(lo, Index(0)), src - 1);
    t.i1[d] = std::min(std::max(hi, Index(0)), src - 1);
    t.w0[d] = 1.0 - frac;
    t.w1[d] = frac;
  }
  return t;
}
}  // namespace detail

template <typename Scalar>
Var<Scalar> bilinear_resize(const Var<Scalar>& x, Index oh, Index ow) {
  if (oh < 1 || ow < 1) throw std::invalid_argument("bilinear_resize: bad target size");
  const Shape4 s = x.shape();
  auto ty = std::make_shared<detail::BilinearTaps>(detail::bilinear_taps(s.h, oh));
  auto tx = std::make_shared<detail::BilinearTaps>(detail::bilinear_taps(s.w, ow));
  Tensor<Scalar> out(s.n, s.c, oh, ow);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index i = 0; i < oh; ++i) {
        for (Index j = 0; j < ow; ++j) {
          const double v =
              ty->w0[i] * (tx->w0[j] * double(x.value()(n, c, ty->i0[i], tx->i0[j])) +
                           tx->w1[j] * double(x.value()(n, c, ty->i0[i], tx->i1[j]))) +
              ty->w1[i] * (tx->w0[j] * double(x.value()(n, c, ty->i1[i], tx->i0[j])) +
                           tx->w1[j] * double(x.value()(n, c, ty->i1[i], tx->i1[j])));
          out(n, c, i, j) = Scalar(v);
        }
      }
    }
  }
  Node<Scalar>* xn = x.node_.get();
  return make_op<Scalar>(std::move(out), {x}, [xn, ty, tx](Node<Scalar>& self) {
    Tensor<Scalar>& dx = xn->ensure_grad();
    const Shape4 os = self.value.shape();
    for (Index n = 0; n < os.n; ++n) {
      for (Index c = 0; c < os.c; ++c) {
        for (Index i = 0; i < os.h; ++i) {
          for (Index j = 0; j < os.w; ++j) {
            const Scalar g = self.grad(n, c, i, j);
            dx(n, c, ty->i0[i], tx->i0[j]) += g * Scalar(ty->w0[i] * tx->w0[j]);
            dx(n, c, ty->i0[i], tx->i1[j]) += g * Scalar(ty->w0[i] * tx->w1[j]);
            dx(n, c, ty->i1[i], tx->i0[j]) += g * Scalar(ty->w1[i] * tx->w0[j]);
            dx(n, c, ty->i1[i], tx->i1[j]) += g * Scalar(ty->w1[i] * tx->w1[j]);
          }
        }
      }
    }
  });
}

/// Elementwise clamp to [0,1]; value-level (inference output conditioning).
template <typename Scalar>
Tensor<Scalar> clamp01(const Tensor<Scalar>& x) {
  Tensor<Scalar> out(x.shape());
  out.array() = x.array().min(Scalar(1)).max(Scalar(0));
  return out;
}

}  // namespace demoire
