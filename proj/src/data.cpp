#include "demoire/data.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "demoire/errors.hpp"
#include "demoire/image_io.hpp"

namespace demoire {

namespace fs = std::filesystem;

namespace {

std::map<std::string, fs::path> png_index(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw DataError("missing dataset directory " + dir.string());
  }
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.emplace(entry.path().stem().string(), entry.path());
    }
  }
  return out;
}

}  // namespace

std::vector<SamplePair> load_pairs(const fs::path& root) {
  const auto inputs = png_index(root / "input");
  const auto gts = png_index(root / "gt");
  for (const auto& [id, path] : inputs) {
    if (!gts.count(id)) throw DataError("input/" + id + ".png has no gt counterpart");
  }
  for (const auto& [id, path] : gts) {
    if (!inputs.count(id)) throw DataError("gt/" + id + ".png has no input counterpart");
  }
  std::vector<SamplePair> pairs;
  pairs.reserve(inputs.size());
  for (const auto& [id, path] : inputs) {  // std::map keeps ids sorted
    SamplePair p;
    p.id = id;
    p.moire = read_png(path);
    p.clean = read_png(gts.at(id));
    if (!(p.moire.shape() == p.clean.shape())) {
      throw DataError("pair " + id + " dimension mismatch: input " + p.moire.shape().str() +
                      " vs gt " + p.clean.shape().str());
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::pair<std::vector<SamplePair>, std::vector<SamplePair>> split_dataset(
    const std::vector<SamplePair>& dataset, std::size_t train_n, std::size_t val_n,
    std::uint64_t seed) {
  if (train_n + val_n > dataset.size()) {
    throw std::invalid_argument("split " + std::to_string(train_n) + "+" +
                                std::to_string(val_n) + " exceeds dataset size " +
                                std::to_string(dataset.size()));
  }
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  KeyedRng rng(rng_key(seed, 0, 0, kTagSplit));
  for (std::size_t i = idx.size(); i > 1; --i) {  // Fisher-Yates
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
  }
  std::pair<std::vector<SamplePair>, std::vector<SamplePair>> out;
  for (std::size_t i = 0; i < train_n; ++i) out.first.push_back(dataset[idx[i]]);
  for (std::size_t i = 0; i < val_n; ++i) out.second.push_back(dataset[idx[train_n + i]]);
  return out;
}

AugmentSpec sample_augment(std::uint64_t key) {
  KeyedRng rng(key);
  AugmentSpec spec;
  spec.rot_quarters = int(rng.next_below(4));
  spec.hflip = (rng.next() & 1) != 0;
  spec.vflip = (rng.next() & 1) != 0;
  return spec;
}

Tensor<float> rot90_ccw(const Tensor<float>& x, int quarters) {
  quarters = ((quarters % 4) + 4) % 4;
  if (quarters == 0) return x;
  const Shape4& s = x.shape();
  // One counterclockwise quarter turn: out(r, c) = in(c, W-1-r).
  Tensor<float> out(Shape4{s.n, s.c, s.w, s.h});
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index r = 0; r < s.w; ++r) {
        for (Index col = 0; col < s.h; ++col) out(n, c, r, col) = x(n, c, col, s.w - 1 - r);
      }
    }
  }
  return rot90_ccw(out, quarters - 1);
}

Tensor<float> flip_horizontal(const Tensor<float>& x) {
  const Shape4& s = x.shape();
  Tensor<float> out(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index h = 0; h < s.h; ++h) {
        for (Index w = 0; w < s.w; ++w) out(n, c, h, w) = x(n, c, h, s.w - 1 - w);
      }
    }
  }
  return out;
}

Tensor<float> flip_vertical(const Tensor<float>& x) {
  const Shape4& s = x.shape();
  Tensor<float> out(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index h = 0; h < s.h; ++h) {
        for (Index w = 0; w < s.w; ++w) out(n, c, h, w) = x(n, c, s.h - 1 - h, w);
      }
    }
  }
  return out;
}

SamplePair apply_augment(const SamplePair& pair, const AugmentSpec& spec) {
  auto transform = [&spec](const Tensor<float>& img) {
    Tensor<float> out = rot90_ccw(img, spec.rot_quarters);
    if (spec.hflip) out = flip_horizontal(out);
    if (spec.vflip) out = flip_vertical(out);
    return out;
  };
  return {pair.id, transform(pair.moire), transform(pair.clean)};
}

SamplePair extract_patch(const SamplePair& pair, Index size, std::uint64_t key) {
  const Shape4& s = pair.moire.shape();
  if (size < 8 || size % 8 != 0) {
    throw std::invalid_argument("patch size " + std::to_string(size) +
                                " must be a positive multiple of 8");
  }
  if (size > s.h || size > s.w) {
    throw std::invalid_argument("patch size " + std::to_string(size) + " exceeds image " +
                                s.str());
  }
  KeyedRng rng(key);
  const Index oh = Index(rng.next_below(std::uint64_t(s.h - size + 1)));
  const Index ow = Index(rng.next_below(std::uint64_t(s.w - size + 1)));
  auto crop = [&](const Tensor<float>& img) {
    Tensor<float> out(Shape4{1, s.c, size, size});
    for (Index c = 0; c < s.c; ++c) {
      for (Index h = 0; h < size; ++h) {
        for (Index w = 0; w < size; ++w) out(0, c, h, w) = img(0, c, oh + h, ow + w);
      }
    }
    return out;
  };
  return {pair.id, crop(pair.moire), crop(pair.clean)};
}

Tensor<float> pad_to_multiple_reflect(const Tensor<float>& x, Index multiple) {
  const Shape4& s = x.shape();
  const Index ph = (multiple - s.h % multiple) % multiple;
  const Index pw = (multiple - s.w % multiple) % multiple;
  if (ph == 0 && pw == 0) return x;
  if (ph >= s.h || pw >= s.w) {
    throw DataError("image " + s.str() + " too small to reflect-pad to a multiple of " +
                    std::to_string(multiple));
  }
  Tensor<float> out(Shape4{s.n, s.c, s.h + ph, s.w + pw});
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index h = 0; h < s.h + ph; ++h) {
        const Index sh = h < s.h ? h : 2 * s.h - 2 - h;
        for (Index w = 0; w < s.w + pw; ++w) {
          const Index sw = w < s.w ? w : 2 * s.w - 2 - w;
          out(n, c, h, w) = x(n, c, sh, sw);
        }
      }
    }
  }
  return out;
}

Tensor<float> crop_top_left(const Tensor<float>& x, Index h, Index w) {
  const Shape4& s = x.shape();
  if (h > s.h || w > s.w) {
    throw std::invalid_argument("crop " + std::to_string(h) + "x" + std::to_string(w) +
                                " exceeds " + s.str());
  }
  if (h == s.h && w == s.w) return x;
  Tensor<float> out(Shape4{s.n, s.c, h, w});
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) out(n, c, i, j) = x(n, c, i, j);
      }
    }
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  KeyedRng rng(rng_key(seed, epoch, 0, kTagShuffle));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.next_below(i)]);
  }
  return order;
}

}  // namespace demoire
