#include "demoire/config_json.hpp"

#include <fstream>
#include <set>

#include "demoire/errors.hpp"

namespace demoire {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T, std::size_t N>
void read_fixed_array(const json& j, const char* key, std::array<T, N>& out,
                      const std::string& where) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != N) {
    throw ConfigError(where + "." + key + " must be an array of " + std::to_string(N));
  }
  for (std::size_t i = 0; i < N; ++i) {
    try {
      a.at(i).get_to(out[i]);
    } catch (const json::exception& e) {
      throw ConfigError(where + "." + key + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
}

}  // namespace

ModelConfig model_config_from_json(const json& j) {
  check_keys(j,
             {"level_widths", "rcabs_per_level", "ca_reduction", "cbam_reduction",
              "cbam_spatial_kernel", "use_coord", "use_cbam_skips", "use_channel_attention",
              "deep_supervision"},
             "model");
  ModelConfig c;
  read_fixed_array(j, "level_widths", c.level_widths, "model");
  read_field(j, "rcabs_per_level", c.rcabs_per_level, "model");
  read_field(j, "ca_reduction", c.ca_reduction, "model");
  read_field(j, "cbam_reduction", c.cbam_reduction, "model");
  read_field(j, "cbam_spatial_kernel", c.cbam_spatial_kernel, "model");
  read_field(j, "use_coord", c.use_coord, "model");
  read_field(j, "use_cbam_skips", c.use_cbam_skips, "model");
  read_field(j, "use_channel_attention", c.use_channel_attention, "model");
  read_field(j, "deep_supervision", c.deep_supervision, "model");
  c.validate();
  return c;
}

json model_config_to_json(const ModelConfig& c) {
  return {{"level_widths", c.level_widths},
          {"rcabs_per_level", c.rcabs_per_level},
          {"ca_reduction", c.ca_reduction},
          {"cbam_reduction", c.cbam_reduction},
          {"cbam_spatial_kernel", c.cbam_spatial_kernel},
          {"use_coord", c.use_coord},
          {"use_cbam_skips", c.use_cbam_skips},
          {"use_channel_attention", c.use_channel_attention},
          {"deep_supervision", c.deep_supervision}};
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j,
             {"model", "epochs", "lr_start", "lr_end", "batch_size", "patch_size", "seed",
              "loss_weights", "eval_every", "checkpoint_dir", "data_root", "train_count",
              "val_count", "augment"},
             "config");
  TrainConfig c;
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  read_field(j, "epochs", c.epochs, "config");
  read_field(j, "lr_start", c.lr_start, "config");
  read_field(j, "lr_end", c.lr_end, "config");
  read_field(j, "batch_size", c.batch_size, "config");
  read_field(j, "patch_size", c.patch_size, "config");
  read_field(j, "seed", c.seed, "config");
  read_fixed_array(j, "loss_weights", c.loss_weights, "config");
  read_field(j, "eval_every", c.eval_every, "config");
  read_field(j, "checkpoint_dir", c.checkpoint_dir, "config");
  read_field(j, "data_root", c.data_root, "config");
  read_field(j, "train_count", c.train_count, "config");
  read_field(j, "val_count", c.val_count, "config");
  read_field(j, "augment", c.augment, "config");
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"model", model_config_to_json(c.model)},
          {"epochs", c.epochs},
          {"lr_start", c.lr_start},
          {"lr_end", c.lr_end},
          {"batch_size", c.batch_size},
          {"patch_size", c.patch_size},
          {"seed", c.seed},
          {"loss_weights", c.loss_weights},
          {"eval_every", c.eval_every},
          {"checkpoint_dir", c.checkpoint_dir},
          {"data_root", c.data_root},
          {"train_count", c.train_count},
          {"val_count", c.val_count},
          {"augment", c.augment}};
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace demoire
