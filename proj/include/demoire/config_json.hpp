#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "demoire/trainer.hpp"

namespace demoire {

/// JSON <-> config conversion with strict key checking: unknown keys are a
/// ConfigError, so typos never silently fall back to defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& config);

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& config);

/// Reads and parses a TrainConfig file. Throws ConfigError on unreadable
/// files, malformed JSON, unknown keys, or invalid values.
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace demoire
