#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "demoire/data.hpp"
#include "demoire/losses.hpp"
#include "demoire/network.hpp"

namespace demoire {

/// 10*log10(peak^2 / mse), capped at 100 dB when mse < 1e-10 so reports
/// never carry infinities.
template <typename Scalar>
Scalar psnr(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt, Scalar peak = Scalar(1)) {
  require_same_shape(pred.shape(), gt.shape(), "psnr");
  const double mse = double((gt.array() - pred.array()).square().mean());
  if (mse < 1e-10) return Scalar(100);
  return Scalar(10.0 * std::log10(double(peak) * double(peak) / mse));
}

/// Mean of the windowed SSIM map; definitional complement of ssim_loss
/// (ssim_loss == 1 - ssim_index bit-exactly, both built on the same mean).
template <typename Scalar>
Scalar ssim_index(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt,
                  const SsimParams<Scalar>& params = {}) {
  return scalar_value(
      mean_all(ssim_map(Var<Scalar>::constant(pred), Var<Scalar>::constant(gt), params)));
}

struct PerImageMetric {
  std::string id;
  double psnr = 0;
  double ssim = 0;
};

struct MetricReport {
  double mean_psnr = 0;
  double mean_ssim = 0;
  std::vector<PerImageMetric> per_image;
  std::size_t count = 0;
  std::string split_label;
};

/// Runs infer on every pair (ordered by id), scoring the clamped output
/// against the clean image. Throws std::invalid_argument on an empty dataset.
MetricReport evaluate_dataset(const HyperVisionNet<float>& model,
                              const std::vector<SamplePair>& dataset,
                              const SsimParams<float>& params = {},
                              const std::string& split_label = "");

/// Table-1-shaped text: columns Data size / Data / PSNR / SSIM.
std::string metric_report_table(const std::vector<MetricReport>& reports);

nlohmann::json metric_report_json(const MetricReport& report);

}  // namespace demoire
