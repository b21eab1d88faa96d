#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "demoire/network.hpp"
#include "demoire/optim.hpp"

namespace demoire {

/// Sidecar contents (the cross-implementation surface of a checkpoint).
struct CheckpointInfo {
  ModelConfig config;
  std::uint64_t seed = 0;
  int epoch = 0;  // epochs completed when saved
  Index parameter_count = 0;
  nlohmann::json metrics;  // best/latest validation metrics; may be empty
};

/// Writes the binary weights file at `path` (with optimizer state when
/// `adam` is non-null) and the JSON sidecar at `path + ".json"`.
/// Throws IoError on write failure.
void save_checkpoint(const std::filesystem::path& path, const HyperVisionNet<float>& model,
                     const Adam<float>* adam, int epoch, const nlohmann::json& metrics);

/// Reads only the sidecar. Throws CheckpointError if missing or malformed.
CheckpointInfo read_sidecar(const std::filesystem::path& path);

/// Loads weights (validated name-by-name and shape-by-shape against the
/// model built from the sidecar config) and optimizer state when present and
/// `adam` is non-null. Throws CheckpointError on any mismatch or corruption.
CheckpointInfo load_checkpoint(const std::filesystem::path& path, HyperVisionNet<float>& model,
                               Adam<float>* adam);

}  // namespace demoire
