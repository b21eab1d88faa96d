#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "demoire/config_json.hpp"
#include "demoire/image_io.hpp"
#include "demoire/metrics.hpp"
#include "demoire/trainer.hpp"

namespace fs = std::filesystem;
using namespace demoire;

namespace {

void apply_seed_override(TrainConfig& config) {
  const char* env = std::getenv("DEMOIRE_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw ConfigError("DEMOIRE_SEED is not an integer: " + std::string(env));
  }
  config.seed = v;
}

int cmd_train(const std::string& config_path, const std::string& resume_path) {
  TrainConfig config = load_train_config(config_path);
  apply_seed_override(config);
  std::optional<fs::path> resume;
  if (!resume_path.empty()) resume = fs::path(resume_path);
  TrainResult result = train(config, resume);
  std::cout << "final checkpoint: " << result.last_checkpoint.string() << '\n';
  if (fs::exists(result.best_checkpoint)) {
    std::cout << "best checkpoint:  " << result.best_checkpoint.string() << '\n';
  }
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& out) {
  MetricReport report = evaluate_checkpoint(ckpt, data_dir);
  const CheckpointInfo info = read_sidecar(ckpt);
  std::cout << metric_report_table({report});
  if (!out.empty()) {
    nlohmann::json j = metric_report_json(report);
    j["parameter_count"] = info.parameter_count;
    j["checkpoint"] = ckpt;
    std::ofstream os(out, std::ios::trunc);
    if (!os) throw IoError("cannot write report " + out);
    os << j.dump(2) << '\n';
  }
  return 0;
}

Tensor<float> hstack_with_gap(const Tensor<float>& a, const Tensor<float>& b, Index gap) {
  const Shape4& s = a.shape();
  Tensor<float> out = Tensor<float>::constant({1, 3, s.h, s.w + gap + b.shape().w}, 1.0f);
  for (Index c = 0; c < 3; ++c) {
    for (Index h = 0; h < s.h; ++h) {
      for (Index w = 0; w < s.w; ++w) out(0, c, h, w) = a(0, c, h, w);
      for (Index w = 0; w < b.shape().w; ++w) out(0, c, h, s.w + gap + w) = b(0, c, h, w);
    }
  }
  return out;
}

int cmd_infer(const std::string& ckpt, const std::string& input, const std::string& output,
              bool pad, bool triptych) {
  CheckpointInfo info = read_sidecar(ckpt);
  HyperVisionNet<float> model(info.config, info.seed);
  load_checkpoint(ckpt, model, nullptr);

  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(input);
  }
  if (files.empty()) throw DataError("no input images under " + input);

  std::error_code ec;
  fs::create_directories(output, ec);
  if (ec || !fs::is_directory(output)) throw IoError("cannot create output dir " + output);

  std::size_t written = 0;
  for (const fs::path& file : files) {
    Tensor<float> image;
    try {
      image = read_png(file);
    } catch (const DataError& e) {
      std::cerr << "warning: skipping " << file.string() << ": " << e.what() << '\n';
      continue;
    }
    const Shape4 orig = image.shape();
    Tensor<float> net_in = image;
    if (pad) {
      net_in = pad_to_multiple_reflect(image, 8);
    } else if (orig.h % 8 != 0 || orig.w % 8 != 0) {
      std::cerr << "warning: skipping " << file.string() << ": dimensions " << orig.str()
                << " not divisible by 8 (rerun with --pad)\n";
      continue;
    }
    Tensor<float> restored = crop_top_left(model.infer(net_in), orig.h, orig.w);
    const std::string stem = file.stem().string();
    write_png(fs::path(output) / (stem + "_demoire.png"), restored);
    if (triptych) {
      write_png(fs::path(output) / (stem + "_triptych.png"),
                hstack_with_gap(image, restored, 4));
    }
    ++written;
  }
  if (written == 0) throw DataError("no input image could be processed");
  std::cout << "wrote " << written << " image(s) to " << output << '\n';
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir) {
  TrainConfig config = load_train_config(config_path);
  apply_seed_override(config);
  run_ablation(config, out_dir);
  std::cout << "ablation report written to " << out_dir << '\n';
  return 0;
}

int cmd_inspect(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file " + config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in " + config_path + ": " + e.what());
  }
  TrainConfig config;
  if (j.is_object() && j.contains("model")) {
    config = train_config_from_json(j);
  } else {
    config.model = model_config_from_json(j);
  }
  apply_seed_override(config);

  HyperVisionNet<float> model(config.model, config.seed);
  std::cout << std::left << std::setw(36) << "parameter" << std::setw(18) << "shape"
            << "count" << '\n';
  for (const auto& [name, shape, count] : model.describe()) {
    std::cout << std::left << std::setw(36) << name << std::setw(18) << shape << count << '\n';
  }
  std::cout << "total parameters: " << model.parameter_count() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"demoire: moire image restoration toolkit"};
  app.require_subcommand(1);

  std::string config_path, resume_path, ckpt, data_dir, out_path, input, output;
  bool pad = false, triptych = false;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", config_path, "training config JSON")->required();
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", data_dir, "dataset dir with input/ and gt/")->required();
  eval_cmd->add_option("--out", out_path, "write the JSON report here");

  CLI::App* infer_cmd = app.add_subcommand("infer", "demoire images");
  infer_cmd->add_option("--ckpt", ckpt, "checkpoint path")->required();
  infer_cmd->add_option("--input", input, "input image or directory")->required();
  infer_cmd->add_option("--output", output, "output directory")->required();
  infer_cmd->add_flag("--pad", pad, "reflect-pad inputs to a multiple of 8 and crop back");
  infer_cmd->add_flag("--triptych", triptych, "also write input|output strips");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the four-variant ablation study");
  ablate_cmd->add_option("--config", config_path, "training config JSON")->required();
  ablate_cmd->add_option("--out", out_path, "report output directory")->required();

  CLI::App* inspect_cmd = app.add_subcommand("inspect", "print parameter count and layer table");
  inspect_cmd->add_option("--config", config_path, "training or model config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, resume_path);
    if (eval_cmd->parsed()) return cmd_eval(ckpt, data_dir, out_path);
    if (infer_cmd->parsed()) return cmd_infer(ckpt, input, output, pad, triptych);
    if (ablate_cmd->parsed()) return cmd_ablate(config_path, out_path);
    if (inspect_cmd->parsed()) return cmd_inspect(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
