#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "demoire/ops.hpp"

namespace demoire {

/// Windowed-SSIM parameters (Gaussian window, stabilizing constants).
template <typename Scalar>
struct SsimParams {
  int window = 11;
  Scalar sigma = Scalar(1.5);
  Scalar k1 = Scalar(0.01);
  Scalar k2 = Scalar(0.03);
  Scalar dynamic_range = Scalar(1);

  Scalar c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  Scalar c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }

  void validate() const {
    if (window < 1 || window % 2 == 0) {
      throw std::invalid_argument("ssim window must be odd and positive");
    }
    if (!(sigma > 0) || !(dynamic_range > 0)) {
      throw std::invalid_argument("ssim sigma and dynamic range must be positive");
    }
  }
};

/// Normalized 2D Gaussian window (sums to 1; computed in double).
template <typename Scalar>
MatrixX<Scalar> gaussian_window(int size, double sigma) {
  Eigen::VectorXd g(size);
  const double center = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  Eigen::MatrixXd win = g * g.transpose();
  win /= win.sum();
  return win.cast<Scalar>();
}

// ---------------------------------------------------------------------------
// MSE
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> mse_loss(const Var<Scalar>& pred, const Var<Scalar>& gt) {
  require_same_shape(pred.shape(), gt.shape(), "mse_loss");
  Var<Scalar> diff = sub(gt, pred);
  return mean_all(mul(diff, diff));
}

template <typename Scalar>
Scalar mse_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt) {
  return scalar_value(mse_loss(Var<Scalar>::constant(pred), Var<Scalar>::constant(gt)));
}

// ---------------------------------------------------------------------------
// SSIM
// ---------------------------------------------------------------------------

/// Per-pixel windowed SSIM map, same shape as the inputs. Moments are taken
/// per channel under a reflect-padded Gaussian window.
template <typename Scalar>
Var<Scalar> ssim_map(const Var<Scalar>& pred, const Var<Scalar>& gt,
                     const SsimParams<Scalar>& params = {}) {
  require_same_shape(pred.shape(), gt.shape(), "ssim_map");
  params.validate();
  const Index pad = params.window / 2;
  std::vector<MatrixX<Scalar>> win{gaussian_window<Scalar>(params.window, double(params.sigma))};

  auto blur = [&](const Var<Scalar>& v) {
    return fixed_filter_valid(reflect_pad(v, pad, pad), win);
  };

  Var<Scalar> mu_x = blur(pred);
  Var<Scalar> mu_y = blur(gt);
  Var<Scalar> mu_xx = mul(mu_x, mu_x);
  Var<Scalar> mu_yy = mul(mu_y, mu_y);
  Var<Scalar> mu_xy = mul(mu_x, mu_y);
  Var<Scalar> sigma_xx = sub(blur(mul(pred, pred)), mu_xx);
  Var<Scalar> sigma_yy = sub(blur(mul(gt, gt)), mu_yy);
  Var<Scalar> sigma_xy = sub(blur(mul(pred, gt)), mu_xy);

  const Scalar c1 = params.c1(), c2 = params.c2();
  Var<Scalar> numer = mul(affine(mu_xy, Scalar(2), c1), affine(sigma_xy, Scalar(2), c2));
  Var<Scalar> denom = mul(affine(add(mu_xx, mu_yy), Scalar(1), c1),
                          affine(add(sigma_xx, sigma_yy), Scalar(1), c2));
  return div(numer, denom);
}

/// 1 - mean of the SSIM map over batch, channels, and pixels.
template <typename Scalar>
Var<Scalar> ssim_loss(const Var<Scalar>& pred, const Var<Scalar>& gt,
                      const SsimParams<Scalar>& params = {}) {
  return affine(mean_all(ssim_map(pred, gt, params)), Scalar(-1), Scalar(1));
}

template <typename Scalar>
Scalar ssim_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt,
                 const SsimParams<Scalar>& params = {}) {
  return scalar_value(
      ssim_loss(Var<Scalar>::constant(pred), Var<Scalar>::constant(gt), params));
}

// ---------------------------------------------------------------------------
// Sobel edge loss
// ---------------------------------------------------------------------------

template <typename Scalar>
std::vector<MatrixX<Scalar>> sobel_kernels() {
  MatrixX<Scalar> gx(3, 3), gy(3, 3);
  gx << -1, 0, 1, -2, 0, 2, -1, 0, 1;
  gy = gx.transpose();
  return {gx, gy};
}

/// Per-channel horizontal and vertical Sobel responses under reflect padding,
/// stacked along channels: all Gx responses first, then all Gy responses.
template <typename Scalar>
Var<Scalar> sobel_edges(const Var<Scalar>& x) {
  return fixed_filter_valid(reflect_pad(x, 1, 1), sobel_kernels<Scalar>());
}

template <typename Scalar>
Tensor<Scalar> sobel_edges(const Tensor<Scalar>& x) {
  return sobel_edges(Var<Scalar>::constant(x)).value();
}

/// Mean squared difference of the Sobel responses of gt and pred.
template <typename Scalar>
Var<Scalar> sobel_loss(const Var<Scalar>& pred, const Var<Scalar>& gt) {
  require_same_shape(pred.shape(), gt.shape(), "sobel_loss");
  Var<Scalar> diff = sub(sobel_edges(gt), sobel_edges(pred));
  return mean_all(mul(diff, diff));
}

template <typename Scalar>
Scalar sobel_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt) {
  return scalar_value(sobel_loss(Var<Scalar>::constant(pred), Var<Scalar>::constant(gt)));
}

// ---------------------------------------------------------------------------
// Composite objective
// ---------------------------------------------------------------------------

template <typename Scalar>
struct LossBreakdown {
  Scalar mse = 0;
  Scalar ssim_loss = 0;
  Scalar sobel_loss = 0;
  Scalar total = 0;
};

/// One auxiliary (deep-supervision) prediction/target pair.
template <typename Scalar>
struct AuxPair {
  Var<Scalar> pred;
  Var<Scalar> gt;
};

template <typename Scalar>
struct TotalLossVars {
  Var<Scalar> mse;
  Var<Scalar> ssim;
  Var<Scalar> sobel;
  Var<Scalar> total;      // unweighted sum, plus auxiliary sums when present
  Var<Scalar> objective;  // weighted sum driving the optimizer

  LossBreakdown<Scalar> breakdown() const {
    return {scalar_value(mse), scalar_value(ssim), scalar_value(sobel), scalar_value(total)};
  }
};

/// Composite loss: MSE + SSIM loss + Sobel loss on the final prediction.
/// Reported components cover the final output only; each auxiliary pair adds
/// its own composite sum into `total`. `weights` scales the three components
/// in `objective` (all components keep unit weight inside `total`).
template <typename Scalar>
TotalLossVars<Scalar> total_loss(const Var<Scalar>& pred, const Var<Scalar>& gt,
                                 const SsimParams<Scalar>& params = {},
                                 const std::vector<AuxPair<Scalar>>& deep = {},
                                 const std::array<Scalar, 3>& weights = {Scalar(1), Scalar(1),
                                                                         Scalar(1)}) {
  TotalLossVars<Scalar> out;
  out.mse = mse_loss(pred, gt);
  out.ssim = ssim_loss(pred, gt, params);
  out.sobel = sobel_loss(pred, gt);
  out.total = add(add(out.mse, out.ssim), out.sobel);
  out.objective = add(add(affine(out.mse, weights[0], Scalar(0)),
                          affine(out.ssim, weights[1], Scalar(0))),
                      affine(out.sobel, weights[2], Scalar(0)));
  for (const auto& aux : deep) {
    Var<Scalar> m = mse_loss(aux.pred, aux.gt);
    Var<Scalar> s = ssim_loss(aux.pred, aux.gt, params);
    Var<Scalar> e = sobel_loss(aux.pred, aux.gt);
    out.total = add(out.total, add(add(m, s), e));
    out.objective = add(out.objective, add(add(affine(m, weights[0], Scalar(0)),
                                               affine(s, weights[1], Scalar(0))),
                                           affine(e, weights[2], Scalar(0))));
  }
  return out;
}

/// Value-level breakdown for already-computed predictions.
template <typename Scalar>
LossBreakdown<Scalar> total_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt,
                                 const SsimParams<Scalar>& params = {}) {
  return total_loss(Var<Scalar>::constant(pred), Var<Scalar>::constant(gt), params)
      .breakdown();
}

}  // namespace demoire
