#pragma once

#include <stdexcept>
#include <string>

namespace demoire {

/// Tensor/feature-map dimensions do not satisfy an operation's contract.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Model or run configuration is inconsistent (bad widths, weight shape
/// mismatch, malformed config file).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset ingestion failed (orphan pair, undecodable image, size mismatch).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Checkpoint file and sidecar are unreadable or mutually inconsistent.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (unwritable directory, short write).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Training aborted (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace demoire
