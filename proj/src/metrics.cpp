#include "demoire/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace demoire {

MetricReport evaluate_dataset(const HyperVisionNet<float>& model,
                              const std::vector<SamplePair>& dataset,
                              const SsimParams<float>& params, const std::string& split_label) {
  if (dataset.empty()) throw std::invalid_argument("evaluate_dataset: empty dataset");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return dataset[a].id < dataset[b].id; });

  MetricReport report;
  report.split_label = split_label;
  double psnr_sum = 0, ssim_sum = 0;
  for (std::size_t i : order) {
    const SamplePair& pair = dataset[i];
    Tensor<float> pred = model.infer(pair.moire);
    PerImageMetric m;
    m.id = pair.id;
    m.psnr = double(psnr(pred, pair.clean));
    m.ssim = double(ssim_index(pred, pair.clean, params));
    psnr_sum += m.psnr;
    ssim_sum += m.ssim;
    report.per_image.push_back(std::move(m));
  }
  report.count = report.per_image.size();
  report.mean_psnr = psnr_sum / double(report.count);
  report.mean_ssim = ssim_sum / double(report.count);
  return report;
}

std::string metric_report_table(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  out << std::left << std::setw(11) << "Data size" << std::setw(18) << "Data" << std::setw(12)
      << "PSNR" << "SSIM" << '\n';
  for (const MetricReport& r : reports) {
    std::ostringstream psnr_s, ssim_s;
    psnr_s << std::fixed << std::setprecision(4) << r.mean_psnr;
    ssim_s << std::fixed << std::setprecision(4) << r.mean_ssim;
    out << std::left << std::setw(11) << r.count << std::setw(18)
        << (r.split_label.empty() ? std::string("-") : r.split_label) << std::setw(12)
        << psnr_s.str() << ssim_s.str() << '\n';
  }
  return out.str();
}

nlohmann::json metric_report_json(const MetricReport& report) {
  nlohmann::json per_image = nlohmann::json::array();
  for (const PerImageMetric& m : report.per_image) {
    per_image.push_back({{"id", m.id}, {"psnr", m.psnr}, {"ssim", m.ssim}});
  }
  return {{"split_label", report.split_label},
          {"count", report.count},
          {"mean_psnr", report.mean_psnr},
          {"mean_ssim", report.mean_ssim},
          {"per_image", per_image}};
}

}  // namespace demoire
