#pragma once

#include <filesystem>

#include "demoire/tensor.hpp"

namespace demoire {

/// Decodes a PNG to a 1x3xHxW tensor in [0,1]. Grayscale, palette, and
/// alpha-carrying files are expanded/flattened to 8-bit RGB first.
/// Throws DataError on unreadable or undecodable files.
Tensor<float> read_png(const std::filesystem::path& path);

/// Encodes a 1x3xHxW tensor as 8-bit RGB PNG; values are clamped to [0,1]
/// and rounded. Throws IoError on write failure.
void write_png(const std::filesystem::path& path, const Tensor<float>& image);

}  // namespace demoire
