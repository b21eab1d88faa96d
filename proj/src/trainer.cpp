#include "demoire/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "demoire/config_json.hpp"

namespace demoire {

namespace fs = std::filesystem;

namespace {

struct Split {
  std::vector<SamplePair> train, val;
};

Split resolve_split(const TrainConfig& config) {
  if (config.data_root.empty()) throw ConfigError("data_root must be set");
  std::vector<SamplePair> dataset = load_pairs(config.data_root);
  if (dataset.empty()) throw DataError("no pairs found under " + config.data_root);
  const std::size_t total = dataset.size();
  const std::size_t val_n =
      config.val_count >= 0 ? std::size_t(config.val_count) : total * 3 / 10;
  const std::size_t train_n =
      config.train_count >= 0 ? std::size_t(config.train_count)
                              : (val_n <= total ? total - val_n : 0);
  if (train_n + val_n > total) {
    throw DataError("split " + std::to_string(train_n) + "+" + std::to_string(val_n) +
                    " exceeds the " + std::to_string(total) + " available pairs");
  }
  if (train_n == 0) throw DataError("training split is empty");
  Split s;
  std::tie(s.train, s.val) = split_dataset(dataset, train_n, val_n, config.seed);
  for (const SamplePair& p : s.train) {
    const Shape4& sh = p.moire.shape();
    if (config.patch_size > sh.h || config.patch_size > sh.w) {
      throw DataError("patch_size " + std::to_string(config.patch_size) + " exceeds pair " +
                      p.id + " (" + sh.str() + ")");
    }
  }
  return s;
}

std::vector<std::string> ids_of(const std::vector<SamplePair>& set) {
  std::vector<std::string> ids;
  ids.reserve(set.size());
  for (const auto& p : set) ids.push_back(p.id);
  return ids;
}

Tensor<float> downscale(const Tensor<float>& img, Index h, Index w) {
  return bilinear_resize(Var<float>::constant(img), h, w).value();
}

nlohmann::json record_json(const RunRecord& rec) {
  nlohmann::json j = {{"epoch", rec.epoch},
                      {"lr", rec.lr},
                      {"mse", rec.train_loss.mse},
                      {"ssim_loss", rec.train_loss.ssim_loss},
                      {"sobel_loss", rec.train_loss.sobel_loss},
                      {"total", rec.train_loss.total},
                      {"wall_time", rec.wall_time}};
  if (rec.val_report) {
    j["val_psnr"] = rec.val_report->mean_psnr;
    j["val_ssim"] = rec.val_report->mean_ssim;
  }
  return j;
}

void print_record(const RunRecord& rec, int epochs) {
  std::ostringstream line;
  line << "epoch " << (rec.epoch + 1) << "/" << epochs << "  lr " << std::scientific
       << std::setprecision(2) << rec.lr << std::fixed << std::setprecision(5) << "  total "
       << rec.train_loss.total << " (mse " << rec.train_loss.mse << " ssim "
       << rec.train_loss.ssim_loss << " sobel " << rec.train_loss.sobel_loss << ")";
  if (rec.val_report) {
    line << "  val " << std::setprecision(2) << rec.val_report->mean_psnr << " dB / "
         << std::setprecision(4) << rec.val_report->mean_ssim;
  }
  line << "  [" << std::setprecision(1) << rec.wall_time << "s]";
  std::cout << line.str() << std::endl;
}

}  // namespace

std::pair<Tensor<float>, Tensor<float>> assemble_batch(const std::vector<SamplePair>& train,
                                                       const std::vector<std::size_t>& order,
                                                       std::size_t start, std::size_t count,
                                                       const TrainConfig& config,
                                                       std::uint64_t epoch) {
  if (count == 0 || start + count > order.size()) {
    throw std::invalid_argument("assemble_batch: bad range");
  }
  const Index p = config.patch_size;
  Tensor<float> moire(Shape4{Index(count), 3, p, p});
  Tensor<float> clean(Shape4{Index(count), 3, p, p});
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pos = start + k;  // position within the epoch keys the RNG
    SamplePair sample = extract_patch(train[order[pos]], p,
                                      rng_key(config.seed, epoch, pos, kTagPatch));
    if (config.augment) {
      sample = apply_augment(sample,
                             sample_augment(rng_key(config.seed, epoch, pos, kTagAugment)));
    }
    for (Index c = 0; c < 3; ++c) {
      for (Index h = 0; h < p; ++h) {
        for (Index w = 0; w < p; ++w) {
          moire(Index(k), c, h, w) = sample.moire(0, c, h, w);
          clean(Index(k), c, h, w) = sample.clean(0, c, h, w);
        }
      }
    }
  }
  return {std::move(moire), std::move(clean)};
}

TrainResult train(const TrainConfig& config, const std::optional<fs::path>& resume,
                  bool quiet) {
  config.validate();
  Split split = resolve_split(config);

  HyperVisionNet<float> model(config.model, config.seed);
  Adam<float> adam;
  adam.init(model.parameters());

  int start_epoch = 0;
  double best_psnr = -1;
  if (resume) {
    CheckpointInfo info = load_checkpoint(*resume, model, &adam);
    if (!(info.config == config.model)) {
      throw ConfigError("checkpoint model config does not match training config");
    }
    start_epoch = info.epoch;
    if (info.metrics.is_object() && info.metrics.contains("best_val_psnr")) {
      best_psnr = info.metrics["best_val_psnr"].get<double>();
    }
  }

  std::error_code ec;
  fs::create_directories(config.checkpoint_dir, ec);
  if (ec || !fs::is_directory(config.checkpoint_dir)) {
    throw IoError("cannot create checkpoint_dir " + config.checkpoint_dir);
  }
  const fs::path dir(config.checkpoint_dir);
  std::ofstream log_stream(dir / "run_log.jsonl",
                           resume ? std::ios::app : std::ios::trunc);
  if (!log_stream) throw IoError("cannot open run log in " + config.checkpoint_dir);

  const SsimParams<float> ssim_params{};
  const std::array<float, 3> weights{float(config.loss_weights[0]),
                                     float(config.loss_weights[1]),
                                     float(config.loss_weights[2])};

  TrainResult result;
  result.train_ids = ids_of(split.train);
  result.val_ids = ids_of(split.val);
  result.last_checkpoint = dir / "last.ckpt";
  result.best_checkpoint = dir / "best.ckpt";
  bool first_step_seen = false;

  for (int e = start_epoch; e < config.epochs; ++e) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double lr = lr_at_epoch(config, e);
    const auto order = epoch_order(split.train.size(), config.seed, std::uint64_t(e));

    LossBreakdown<double> sums{};
    int steps = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += std::size_t(config.batch_size)) {
      const std::size_t count =
          std::min(std::size_t(config.batch_size), order.size() - pos);
      auto [moire, clean] = assemble_batch(split.train, order, pos, count, config,
                                           std::uint64_t(e));

      ForwardVars<float> fw = model.forward_vars(Var<float>::constant(std::move(moire)));
      Var<float> gt = Var<float>::constant(clean);
      std::vector<AuxPair<float>> deep;
      if (config.model.deep_supervision) {
        const Shape4& gs = gt.shape();
        deep.push_back({fw.hypervision[0],
                        Var<float>::constant(downscale(clean, gs.h / 4, gs.w / 4))});
        deep.push_back({fw.hypervision[1],
                        Var<float>::constant(downscale(clean, gs.h / 2, gs.w / 2))});
        deep.push_back({fw.hypervision[2], gt});
      }
      TotalLossVars<float> loss = total_loss(fw.final, gt, ssim_params, deep, weights);
      const LossBreakdown<float> breakdown = loss.breakdown();
      const float objective = scalar_value(loss.objective);
      if (!std::isfinite(breakdown.total) || !std::isfinite(objective)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(e) + " step " +
                            std::to_string(steps));
      }
      if (!first_step_seen) {
        result.first_step_loss = double(breakdown.total);
        first_step_seen = true;
      }

      for (auto& [name, param] : model.parameters()) param.zero_grad();
      loss.objective.backward();
      adam.update(model.parameters(), float(lr));

      sums.mse += double(breakdown.mse);
      sums.ssim_loss += double(breakdown.ssim_loss);
      sums.sobel_loss += double(breakdown.sobel_loss);
      sums.total += double(breakdown.total);
      ++steps;
    }

    RunRecord rec;
    rec.epoch = e;
    rec.lr = lr;
    rec.train_loss = {sums.mse / steps, sums.ssim_loss / steps, sums.sobel_loss / steps,
                      sums.total / steps};

    const bool last_epoch = (e == config.epochs - 1);
    if (!split.val.empty() && ((e + 1) % config.eval_every == 0 || last_epoch)) {
      rec.val_report = evaluate_dataset(model, split.val, ssim_params, "validation");
      if (rec.val_report->mean_psnr > best_psnr) {
        best_psnr = rec.val_report->mean_psnr;
        save_checkpoint(result.best_checkpoint, model, &adam, e + 1,
                        {{"best_val_psnr", best_psnr},
                         {"val_ssim", rec.val_report->mean_ssim},
                         {"epoch", e + 1}});
      }
    }

    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    log_stream << record_json(rec).dump() << '\n';
    log_stream.flush();
    if (!quiet) print_record(rec, config.epochs);
    result.log.push_back(std::move(rec));
  }

  nlohmann::json final_metrics = {{"best_val_psnr", best_psnr}};
  if (!result.log.empty()) final_metrics["final_train_total"] = result.log.back().train_loss.total;
  save_checkpoint(result.last_checkpoint, model, &adam, config.epochs, final_metrics);
  return result;
}

MetricReport evaluate_checkpoint(const fs::path& ckpt, const fs::path& data_dir) {
  CheckpointInfo info = read_sidecar(ckpt);
  HyperVisionNet<float> model(info.config, info.seed);
  load_checkpoint(ckpt, model, nullptr);
  std::vector<SamplePair> pairs = load_pairs(data_dir);
  if (pairs.empty()) throw DataError("no pairs found under " + data_dir.string());
  return evaluate_dataset(model, pairs, {}, data_dir.filename().string());
}

namespace {

std::string slugify(const std::string& label) {
  std::string s = label;
  for (char& c : s) c = (c == ' ') ? '_' : char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

AblationReport run_ablation(const TrainConfig& base, const fs::path& out_dir, bool quiet) {
  base.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create ablation output dir " + out_dir.string());
  }

  struct Variant {
    std::string label;
    void (*tweak)(ModelConfig&);
  };
  const Variant variants[] = {
      {"without CCL", [](ModelConfig& m) { m.use_coord = false; }},
      {"without CBAM", [](ModelConfig& m) { m.use_cbam_skips = false; }},
      {"without channel attention", [](ModelConfig& m) { m.use_channel_attention = false; }},
      {"proposed", [](ModelConfig&) {}},
  };

  AblationReport report;
  for (const Variant& variant : variants) {
    TrainConfig cfg = base;
    variant.tweak(cfg.model);
    cfg.checkpoint_dir = (out_dir / slugify(variant.label)).string();
    if (!quiet) std::cout << "== ablation variant: " << variant.label << std::endl;
    TrainResult run = train(cfg, std::nullopt, quiet);

    if (report.rows.empty()) {
      report.train_ids = run.train_ids;
      report.val_ids = run.val_ids;
    } else if (run.train_ids != report.train_ids || run.val_ids != report.val_ids) {
      throw TrainingError("ablation variants diverged on the data split");
    }
    if (run.val_ids.empty()) {
      throw DataError("ablation requires a non-empty validation split");
    }

    HyperVisionNet<float> model(cfg.model, cfg.seed);
    load_checkpoint(run.last_checkpoint, model, nullptr);
    Split split = resolve_split(cfg);
    MetricReport train_report = evaluate_dataset(model, split.train, {}, "train");
    MetricReport val_report = evaluate_dataset(model, split.val, {}, "validation");

    AblationRow row;
    row.label = variant.label;
    row.model = cfg.model;
    row.train_psnr = train_report.mean_psnr;
    row.train_ssim = train_report.mean_ssim;
    row.val_psnr = val_report.mean_psnr;
    row.val_ssim = val_report.mean_ssim;
    report.rows.push_back(std::move(row));
  }

  std::ofstream js(out_dir / "report.json", std::ios::trunc);
  if (!js) throw IoError("cannot write ablation report.json");
  js << ablation_report_json(report).dump(2) << '\n';
  std::ofstream txt(out_dir / "report.txt", std::ios::trunc);
  if (!txt) throw IoError("cannot write ablation report.txt");
  txt << ablation_report_table(report);
  if (!quiet) std::cout << ablation_report_table(report);
  return report;
}

nlohmann::json ablation_report_json(const AblationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const AblationRow& r : report.rows) {
    rows.push_back({{"label", r.label},
                    {"config", model_config_to_json(r.model)},
                    {"train_psnr", r.train_psnr},
                    {"train_ssim", r.train_ssim},
                    {"val_psnr", r.val_psnr},
                    {"val_ssim", r.val_ssim}});
  }
  return {{"rows", rows}, {"train_ids", report.train_ids}, {"val_ids", report.val_ids}};
}

std::string ablation_report_table(const AblationReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "Ablation effect" << std::setw(22) << "Train"
      << "Validation" << '\n';
  out << std::left << std::setw(28) << "" << std::setw(11) << "PSNR" << std::setw(11) << "SSIM"
      << std::setw(11) << "PSNR" << "SSIM" << '\n';
  for (const AblationRow& r : report.rows) {
    out << std::left << std::setw(28) << r.label << std::fixed << std::setprecision(4)
        << std::setw(11) << r.train_psnr << std::setw(11) << r.train_ssim << std::setw(11)
        << r.val_psnr << r.val_ssim << '\n';
  }
  return out.str();
}

}  // namespace demoire
