#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "demoire/tensor.hpp"

namespace demoire {

/// One moire/clean training pair; both images 1x3xHxW with identical H, W.
struct SamplePair {
  std::string id;
  Tensor<float> moire;
  Tensor<float> clean;
};

/// Geometric augmentation, applied as rotate -> hflip -> vflip.
struct AugmentSpec {
  int rot_quarters = 0;  // counterclockwise quarter turns, 0..3
  bool hflip = false;
  bool vflip = false;
};

// Deterministic RNG keying ---------------------------------------------------
//
// Every random data decision is derived from a pure key of
// (seed, epoch, sample index, purpose tag), so prefetch order, resumption,
// or parallelism cannot change what a sample looks like.

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kTagAugment = 1;
inline constexpr std::uint64_t kTagPatch = 2;
inline constexpr std::uint64_t kTagShuffle = 3;
inline constexpr std::uint64_t kTagSplit = 4;

inline std::uint64_t rng_key(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index,
                             std::uint64_t tag) {
  std::uint64_t s = mix64(seed + 0x9e3779b97f4a7c15ull);
  s = mix64(s ^ (epoch + 0x9e3779b97f4a7c15ull));
  s = mix64(s ^ (index + 0x9e3779b97f4a7c15ull));
  return mix64(s ^ (tag + 0x9e3779b97f4a7c15ull));
}

/// splitmix64 stream over a key; platform-independent draws.
class KeyedRng {
 public:
  explicit KeyedRng(std::uint64_t key) : state_(key) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  /// Uniform draw in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

// Dataset operations ---------------------------------------------------------

/// Loads matched pairs from root/input and root/gt (same filename stems,
/// PNG). Result is sorted by id. Throws DataError on missing counterparts,
/// per-pair dimension mismatches, or undecodable files.
std::vector<SamplePair> load_pairs(const std::filesystem::path& root);

/// Seeded shuffle followed by a prefix split into (train, val).
/// Throws std::invalid_argument when train_n + val_n exceeds the dataset.
std::pair<std::vector<SamplePair>, std::vector<SamplePair>> split_dataset(
    const std::vector<SamplePair>& dataset, std::size_t train_n, std::size_t val_n,
    std::uint64_t seed);

/// Draws rotation uniform over {0..3} and each flip with probability 1/2.
AugmentSpec sample_augment(std::uint64_t key);

/// Applies the same rotate -> hflip -> vflip transform to both images.
SamplePair apply_augment(const SamplePair& pair, const AugmentSpec& spec);

/// Crops the same uniformly-drawn size x size window from both images.
/// size must be divisible by 8 and fit inside the pair.
SamplePair extract_patch(const SamplePair& pair, Index size, std::uint64_t key);

/// Seeded permutation of 0..n-1 giving the sample order for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

// Geometric helpers (shared with the CLI's pad/crop preprocessing) -----------

Tensor<float> rot90_ccw(const Tensor<float>& x, int quarters);
Tensor<float> flip_horizontal(const Tensor<float>& x);
Tensor<float> flip_vertical(const Tensor<float>& x);

/// Reflect-pads bottom/right so H and W become multiples of `multiple`.
/// Requires each spatial dim > the padding it needs (true for images >= 8px
/// with multiple 8). Throws DataError otherwise.
Tensor<float> pad_to_multiple_reflect(const Tensor<float>& x, Index multiple);

/// Top-left crop to h x w.
Tensor<float> crop_top_left(const Tensor<float>& x, Index h, Index w);

}  // namespace demoire
