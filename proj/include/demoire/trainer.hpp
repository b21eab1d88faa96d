#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "demoire/checkpoint.hpp"
#include "demoire/data.hpp"
#include "demoire/losses.hpp"
#include "demoire/metrics.hpp"
#include "demoire/network.hpp"
#include "demoire/optim.hpp"

namespace demoire {

struct TrainConfig {
  ModelConfig model;
  int epochs = 500;
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  int batch_size = 16;
  int patch_size = 128;
  std::uint64_t seed = 0;
  std::array<double, 3> loss_weights{1.0, 1.0, 1.0};  // mse, ssim, sobel
  int eval_every = 1;
  std::string checkpoint_dir = "checkpoints";
  std::string data_root;
  int train_count = -1;  // -1: all pairs not taken by val
  int val_count = -1;    // -1: 30% of the dataset (rounded down)
  bool augment = true;

  void validate() const {
    model.validate();
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(lr_end > 0) || lr_start < lr_end) {
      throw ConfigError("learning rates must satisfy lr_start >= lr_end > 0");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (patch_size < 8 || patch_size % 8 != 0) {
      throw ConfigError("patch_size must be a positive multiple of 8");
    }
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (checkpoint_dir.empty()) throw ConfigError("checkpoint_dir must be set");
  }
};

/// Geometric interpolation between lr_start and lr_end over the epoch range.
inline double lr_at_epoch(const TrainConfig& config, int epoch) {
  if (epoch < 0 || epoch >= config.epochs) {
    throw std::invalid_argument("epoch " + std::to_string(epoch) + " outside [0, " +
                                std::to_string(config.epochs - 1) + "]");
  }
  if (config.epochs == 1) return config.lr_start;
  const double t = double(epoch) / double(config.epochs - 1);
  return config.lr_start * std::pow(config.lr_end / config.lr_start, t);
}

struct RunRecord {
  int epoch = 0;
  LossBreakdown<double> train_loss;  // per-step averages
  std::optional<MetricReport> val_report;
  double lr = 0;
  double wall_time = 0;  // seconds spent in this epoch
};

struct TrainResult {
  std::vector<RunRecord> log;  // one record per epoch run in this call
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
  double first_step_loss = 0;  // total loss at the first optimizer step
  std::vector<std::string> train_ids, val_ids;
};

/// Deterministic batch assembly: patches and augmentations are keyed on
/// (seed, epoch, position-in-epoch), positions [start, start+count) of the
/// epoch's shuffled order.
std::pair<Tensor<float>, Tensor<float>> assemble_batch(const std::vector<SamplePair>& train,
                                                       const std::vector<std::size_t>& order,
                                                       std::size_t start, std::size_t count,
                                                       const TrainConfig& config,
                                                       std::uint64_t epoch);

/// Full training run (optionally resumed): Adam at lr_at_epoch, per-epoch
/// loss averages, validation every eval_every epochs, checkpoints at the
/// best validation PSNR and at the final epoch, newline-delimited JSON log
/// in checkpoint_dir. Throws TrainingError on non-finite loss, DataError on
/// unusable datasets, IoError on unwritable outputs.
TrainResult train(const TrainConfig& config,
                  const std::optional<std::filesystem::path>& resume = std::nullopt,
                  bool quiet = false);

/// Rebuilds the model from the sidecar, loads weights, and evaluates every
/// pair under data_dir (input/ + gt/ layout).
MetricReport evaluate_checkpoint(const std::filesystem::path& ckpt,
                                 const std::filesystem::path& data_dir);

struct AblationRow {
  std::string label;
  ModelConfig model;
  double train_psnr = 0, train_ssim = 0;
  double val_psnr = 0, val_ssim = 0;
};

struct AblationReport {
  std::vector<AblationRow> rows;                 // without CCL / without CBAM /
                                                 // without channel attention / proposed
  std::vector<std::string> train_ids, val_ids;   // shared across all four runs
};

/// Trains the three single-flag ablations plus the full model under one
/// seed/split/schedule; writes report.json and a four-row report.txt table
/// into out_dir.
AblationReport run_ablation(const TrainConfig& base, const std::filesystem::path& out_dir,
                            bool quiet = false);

nlohmann::json ablation_report_json(const AblationReport& report);
std::string ablation_report_table(const AblationReport& report);

}  // namespace demoire
