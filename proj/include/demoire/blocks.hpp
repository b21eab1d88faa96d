#pragma once

#include <array>
#include <optional>

#include "demoire/ops.hpp"

namespace demoire {

/// Channel-attention / CBAM hyperparameters.
struct AttentionParams {
  int reduction_ratio = 8;
  int spatial_kernel = 7;

  void validate() const {
    if (reduction_ratio < 1) throw ConfigError("reduction_ratio must be positive");
    if (spatial_kernel < 1 || spatial_kernel % 2 == 0) {
      throw ConfigError("spatial_kernel must be odd and positive, got " +
                        std::to_string(spatial_kernel));
    }
  }
};

/// Bottleneck width of the attention MLP for a given channel count.
inline Index attention_hidden(Index channels, int reduction_ratio) {
  Index h = channels / reduction_ratio;
  return h < 1 ? 1 : h;
}

// ---------------------------------------------------------------------------
// Coordinate channels
// ---------------------------------------------------------------------------

/// 1 x 2 x H x W map of normalized Cartesian coordinates. Channel 0 varies
/// along width (x), channel 1 along height (y); an axis of length n maps
/// index i to 2*i/(n-1) - 1, and a length-1 axis to 0.
template <typename Scalar>
Tensor<Scalar> coord_channels(Index height, Index width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("coord_channels: dimensions must be positive");
  }
  Tensor<Scalar> out(1, 2, height, width);
  // signed integer numerator keeps coord(i) == -coord(n-1-i) exact
  for (Index i = 0; i < height; ++i) {
    const Scalar y = height > 1 ? Scalar(2 * i - (height - 1)) / Scalar(height - 1) : Scalar(0);
    for (Index j = 0; j < width; ++j) {
      const Scalar x = width > 1 ? Scalar(2 * j - (width - 1)) / Scalar(width - 1) : Scalar(0);
      out(0, 0, i, j) = x;
      out(0, 1, i, j) = y;
    }
  }
  return out;
}

/// Appends the two coordinate channels after the input channels, broadcast
/// over the batch. Coordinates are constants; no gradient flows into them.
template <typename Scalar>
Var<Scalar> coord_concat(const Var<Scalar>& x) {
  const Shape4 s = x.shape();
  Tensor<Scalar> single = coord_channels<Scalar>(s.h, s.w);
  Tensor<Scalar> coords(s.n, 2, s.h, s.w);
  for (Index n = 0; n < s.n; ++n) {
    std::copy(single.data(), single.data() + single.size(),
              coords.data() + n * 2 * s.h * s.w);
  }
  return concat_channels<Scalar>({x, Var<Scalar>::constant(std::move(coords))});
}

// ---------------------------------------------------------------------------
// Channel attention (squeeze-excite style gap -> reduce -> relu -> expand ->
// sigmoid)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ChannelAttentionWeights {
  Var<Scalar> reduce_w;  // (hidden, C, 1, 1)
  Var<Scalar> reduce_b;  // (1, hidden, 1, 1)
  Var<Scalar> expand_w;  // (C, hidden, 1, 1)
  Var<Scalar> expand_b;  // (1, C, 1, 1)
};

template <typename Scalar>
Var<Scalar> channel_attention_gate(const Var<Scalar>& x,
                                   const ChannelAttentionWeights<Scalar>& w) {
  if (w.expand_w.shape().n != x.shape().c) {
    throw ConfigError("channel_attention: weights expect " +
                      std::to_string(w.expand_w.shape().n) + " channels, feature map has " +
                      std::to_string(x.shape().c));
  }
  Var<Scalar> pooled = spatial_mean(x);
  Var<Scalar> hidden = relu(conv2d(pooled, w.reduce_w, w.reduce_b, 1, 0));
  return sigmoid(conv2d(hidden, w.expand_w, w.expand_b, 1, 0));
}

template <typename Scalar>
Var<Scalar> channel_attention(const Var<Scalar>& x, const ChannelAttentionWeights<Scalar>& w) {
  return scale_channels(x, channel_attention_gate(x, w));
}

// ---------------------------------------------------------------------------
// CBAM: channel gate from shared MLP over average- and max-pooled
// descriptors, then spatial gate from a KxK conv over channelwise mean/max.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct CbamWeights {
  ChannelAttentionWeights<Scalar> mlp;  // shared between the two descriptors
  Var<Scalar> spatial_w;                // (1, 2, K, K)
  Var<Scalar> spatial_b;                // (1, 1, 1, 1)
};

template <typename Scalar>
Var<Scalar> cbam(const Var<Scalar>& x, const CbamWeights<Scalar>& w) {
  if (w.mlp.expand_w.shape().n != x.shape().c) {
    throw ConfigError("cbam: MLP weights expect " +
                      std::to_string(w.mlp.expand_w.shape().n) + " channels, feature map has " +
                      std::to_string(x.shape().c));
  }
  if (w.spatial_w.shape().c != 2 || w.spatial_w.shape().h % 2 == 0) {
    throw ConfigError("cbam: spatial conv must take 2 channels with an odd kernel");
  }
  auto mlp = [&](const Var<Scalar>& d) {
    return conv2d(relu(conv2d(d, w.mlp.reduce_w, w.mlp.reduce_b, 1, 0)), w.mlp.expand_w,
                  w.mlp.expand_b, 1, 0);
  };
  Var<Scalar> channel_gate = sigmoid(add(mlp(spatial_mean(x)), mlp(spatial_max(x))));
  Var<Scalar> gated = scale_channels(x, channel_gate);

  Var<Scalar> stats = concat_channels<Scalar>({channel_mean(gated), channel_max(gated)});
  Var<Scalar> spatial_gate = sigmoid(conv2d(stats, w.spatial_w, w.spatial_b));
  return scale_spatial(gated, spatial_gate);
}

// ---------------------------------------------------------------------------
// Attention block and RCAB
// ---------------------------------------------------------------------------

template <typename Scalar>
struct AttentionBlockWeights {
  Var<Scalar> conv_w;  // (C, C, 3, 3)
  Var<Scalar> conv_b;  // (1, C, 1, 1)
  // Absent when the channel-attention gate is ablated to the identity.
  std::optional<ChannelAttentionWeights<Scalar>> ca;
};

/// conv3x3 -> ReLU -> channel attention (identity when ablated).
template <typename Scalar>
Var<Scalar> attention_block(const Var<Scalar>& x, const AttentionBlockWeights<Scalar>& w) {
  Var<Scalar> features = relu(conv2d(x, w.conv_w, w.conv_b));
  if (!w.ca) return features;
  return channel_attention(features, *w.ca);
}

template <typename Scalar>
struct RcabWeights {
  std::array<AttentionBlockWeights<Scalar>, 3> blocks;
  Var<Scalar> fuse_w;  // (C, 3C, 1, 1)
  Var<Scalar> fuse_b;  // (1, C, 1, 1)
};

/// Three chained attention blocks, outputs densely concatenated, fused by a
/// 1x1 conv, added back to the block input.
template <typename Scalar>
Var<Scalar> rcab(const Var<Scalar>& x, const RcabWeights<Scalar>& w) {
  Var<Scalar> a1 = attention_block(x, w.blocks[0]);
  Var<Scalar> a2 = attention_block(a1, w.blocks[1]);
  Var<Scalar> a3 = attention_block(a2, w.blocks[2]);
  Var<Scalar> fused = conv2d(concat_channels<Scalar>({a1, a2, a3}), w.fuse_w, w.fuse_b, 1, 0);
  return add(x, fused);
}

}  // namespace demoire
