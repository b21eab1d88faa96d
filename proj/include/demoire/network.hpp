#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "demoire/blocks.hpp"

namespace demoire {

/// Architecture hyperparameters. Fully determines topology and parameter
/// count; the three use_* flags select the ablation variants.
struct ModelConfig {
  std::array<int, 3> level_widths{16, 32, 64};  // full, 1/2, 1/4 resolution
  int rcabs_per_level = 2;
  int ca_reduction = 8;
  int cbam_reduction = 8;
  int cbam_spatial_kernel = 7;
  bool use_coord = true;
  bool use_cbam_skips = true;
  bool use_channel_attention = true;
  bool deep_supervision = false;

  void validate() const {
    for (int w : level_widths) {
      if (w < 4) throw ConfigError("level width must be >= 4, got " + std::to_string(w));
    }
    if (rcabs_per_level < 1) throw ConfigError("rcabs_per_level must be >= 1");
    if (ca_reduction < 1) throw ConfigError("ca_reduction must be >= 1");
    if (cbam_reduction < 1) throw ConfigError("cbam_reduction must be >= 1");
    if (cbam_spatial_kernel < 1 || cbam_spatial_kernel % 2 == 0) {
      throw ConfigError("cbam_spatial_kernel must be odd and positive, got " +
                        std::to_string(cbam_spatial_kernel));
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
struct ForwardOutput {
  Tensor<Scalar> final;                       // N x 3 x H x W
  std::array<Tensor<Scalar>, 3> hypervision;  // scales 1/4, 1/2, 1/1
};

template <typename Scalar>
struct ForwardVars {
  Var<Scalar> final;
  std::array<Var<Scalar>, 3> hypervision;
};

/// Multi Level Hyper Vision Net.
///
/// Topology: optional coordinate channels -> two 3x3 head convs -> three
/// encoder levels (RCABs + stride-2 downsampling) -> bottleneck RCABs ->
/// three decoder levels (conv to 4C + pixel shuffle, CBAM-gated skip concat,
/// merge conv, RCABs, a 3-channel hypervision head each) -> the three
/// hypervision predictions upsampled, concatenated with the input, and fused
/// by one 3x3 conv.
template <typename Scalar>
class HyperVisionNet {
 public:
  HyperVisionNet(const ModelConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
    config.validate();
    build();
  }

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<std::pair<std::string, Var<Scalar>>>& parameters() { return params_; }
  const std::vector<std::pair<std::string, Var<Scalar>>>& parameters() const { return params_; }

  Index parameter_count() const {
    Index total = 0;
    for (const auto& [name, v] : params_) total += v.value().size();
    return total;
  }

  /// Autodiff forward pass; input may carry gradients (e.g. for checks).
  ForwardVars<Scalar> forward_vars(const Var<Scalar>& x) const {
    const Shape4& s = x.shape();
    if (s.c != 3) {
      throw ShapeError("forward expects 3 input channels, got " + std::to_string(s.c));
    }
    if (s.h % 8 != 0) {
      throw ShapeError("input height " + std::to_string(s.h) + " not divisible by 8");
    }
    if (s.w % 8 != 0) {
      throw ShapeError("input width " + std::to_string(s.w) + " not divisible by 8");
    }

    Var<Scalar> h = config_.use_coord ? coord_concat(x) : x;
    h = conv2d(h, head1_.w, head1_.b);
    h = conv2d(h, head2_.w, head2_.b);

    std::array<Var<Scalar>, 3> enc_out;  // pre-downsample features per level
    for (int i = 0; i < 3; ++i) {
      for (const auto& r : enc_rcabs_[i]) h = rcab(h, r);
      enc_out[i] = h;
      h = conv2d(h, down_[i].w, down_[i].b, 2);
    }
    for (const auto& r : bottleneck_) h = rcab(h, r);

    ForwardVars<Scalar> out;
    for (int i = 2; i >= 0; --i) {
      h = pixel_shuffle(conv2d(h, dec_[i].up_w, dec_[i].up_b), 2);
      Var<Scalar> skip = config_.use_cbam_skips ? cbam(enc_out[i], skip_cbam_[i]) : enc_out[i];
      h = conv2d(concat_channels<Scalar>({h, skip}), dec_[i].merge_w, dec_[i].merge_b);
      for (const auto& r : dec_[i].rcabs) h = rcab(h, r);
      out.hypervision[2 - i] = conv2d(h, dec_[i].head_w, dec_[i].head_b);
    }
    out.final = fuse_hypervision(out.hypervision, x);
    return out;
  }

  /// Upsample the lower-scale predictions, concatenate with the input image
  /// (12 channels total), and fuse with a single 3x3 conv.
  Var<Scalar> fuse_hypervision(const std::array<Var<Scalar>, 3>& preds,
                               const Var<Scalar>& input) const {
    const Shape4& s = input.shape();
    for (int k = 0; k < 3; ++k) {
      const Shape4& p = preds[k].shape();
      const Index scale = Index(1) << (2 - k);
      if (p.h * scale != s.h || p.w * scale != s.w || p.n != s.n) {
        throw ShapeError("hypervision prediction " + std::to_string(k) + " at " + p.str() +
                         " inconsistent with input " + s.str());
      }
    }
    Var<Scalar> fused = concat_channels<Scalar>({bilinear_resize(preds[0], s.h, s.w),
                                                 bilinear_resize(preds[1], s.h, s.w), preds[2],
                                                 input});
    return conv2d(fused, fuse_.w, fuse_.b);
  }

  ForwardOutput<Scalar> forward(const Tensor<Scalar>& x) const {
    ForwardVars<Scalar> v = forward_vars(Var<Scalar>::constant(x));
    ForwardOutput<Scalar> out;
    out.final = v.final.value();
    for (int k = 0; k < 3; ++k) out.hypervision[k] = v.hypervision[k].value();
    return out;
  }

  /// Forward pass clamped to [0,1] for image output.
  Tensor<Scalar> infer(const Tensor<Scalar>& x) const { return clamp01(forward(x).final); }

  /// (name, shape, element count) rows in registration order.
  std::vector<std::tuple<std::string, std::string, Index>> describe() const {
    std::vector<std::tuple<std::string, std::string, Index>> rows;
    rows.reserve(params_.size());
    for (const auto& [name, v] : params_) {
      rows.emplace_back(name, v.shape().str(), v.value().size());
    }
    return rows;
  }

 private:
  struct Conv {
    Var<Scalar> w, b;
  };
  struct Decoder {
    Var<Scalar> up_w, up_b;        // conv to 4*w_i before pixel shuffle
    Var<Scalar> merge_w, merge_b;  // 2*w_i -> w_i after skip concat
    std::vector<RcabWeights<Scalar>> rcabs;
    Var<Scalar> head_w, head_b;  // w_i -> 3 hypervision prediction
  };

  ModelConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, Var<Scalar>>> params_;

  Conv head1_, head2_;
  std::array<std::vector<RcabWeights<Scalar>>, 3> enc_rcabs_;
  std::array<Conv, 3> down_;
  std::vector<RcabWeights<Scalar>> bottleneck_;
  std::array<CbamWeights<Scalar>, 3> skip_cbam_;
  std::array<Decoder, 3> dec_;
  Conv fuse_;

  Var<Scalar> make_param(const std::string& name, Index oc, Index ic, Index kh, Index kw,
                         std::mt19937_64& rng, bool bias) {
    Tensor<Scalar> t = Tensor<Scalar>::zeros(bias ? Shape4{1, oc, 1, 1} : Shape4{oc, ic, kh, kw});
    if (!bias) {
      // He fan-in init; draw in double so the stream is scalar-type agnostic.
      const double stddev = std::sqrt(2.0 / double(ic * kh * kw));
      std::normal_distribution<double> dist(0.0, stddev);
      for (Index i = 0; i < t.size(); ++i) t.data()[i] = Scalar(dist(rng));
    }
    Var<Scalar> v = Var<Scalar>::leaf(std::move(t), true);
    params_.emplace_back(name, v);
    return v;
  }

  Conv make_conv(const std::string& name, Index ic, Index oc, Index k, std::mt19937_64& rng) {
    Conv c;
    c.w = make_param(name + ".weight", oc, ic, k, k, rng, false);
    c.b = make_param(name + ".bias", oc, 0, 0, 0, rng, true);
    return c;
  }

  ChannelAttentionWeights<Scalar> make_ca(const std::string& name, Index c, int reduction,
                                          std::mt19937_64& rng) {
    const Index hidden = attention_hidden(c, reduction);
    ChannelAttentionWeights<Scalar> w;
    w.reduce_w = make_param(name + ".reduce.weight", hidden, c, 1, 1, rng, false);
    w.reduce_b = make_param(name + ".reduce.bias", hidden, 0, 0, 0, rng, true);
    w.expand_w = make_param(name + ".expand.weight", c, hidden, 1, 1, rng, false);
    w.expand_b = make_param(name + ".expand.bias", c, 0, 0, 0, rng, true);
    return w;
  }

  RcabWeights<Scalar> make_rcab(const std::string& name, Index c, std::mt19937_64& rng) {
    RcabWeights<Scalar> w;
    for (int b = 0; b < 3; ++b) {
      const std::string bn = name + ".block" + std::to_string(b);
      Conv conv = make_conv(bn + ".conv", c, c, 3, rng);
      w.blocks[b].conv_w = conv.w;
      w.blocks[b].conv_b = conv.b;
      if (config_.use_channel_attention) {
        w.blocks[b].ca = make_ca(bn + ".ca", c, config_.ca_reduction, rng);
      }
    }
    Conv fuse = make_conv(name + ".fuse", 3 * c, c, 1, rng);
    w.fuse_w = fuse.w;
    w.fuse_b = fuse.b;
    return w;
  }

  std::vector<RcabWeights<Scalar>> make_rcab_chain(const std::string& name, Index c,
                                                   std::mt19937_64& rng) {
    std::vector<RcabWeights<Scalar>> chain;
    chain.reserve(config_.rcabs_per_level);
    for (int i = 0; i < config_.rcabs_per_level; ++i) {
      chain.push_back(make_rcab(name + ".rcab" + std::to_string(i), c, rng));
    }
    return chain;
  }

  void build() {
    std::mt19937_64 rng(seed_);
    const auto& w = config_.level_widths;
    const Index in_ch = config_.use_coord ? 5 : 3;

    head1_ = make_conv("head.conv1", in_ch, w[0], 3, rng);
    head2_ = make_conv("head.conv2", w[0], w[0], 3, rng);

    for (int i = 0; i < 3; ++i) {
      const std::string lvl = "enc" + std::to_string(i);
      enc_rcabs_[i] = make_rcab_chain(lvl, w[i], rng);
      const Index next = (i < 2) ? w[i + 1] : w[2];
      down_[i] = make_conv(lvl + ".down", w[i], next, 3, rng);
    }
    bottleneck_ = make_rcab_chain("bottleneck", w[2], rng);

    if (config_.use_cbam_skips) {
      for (int i = 0; i < 3; ++i) {
        const std::string name = "skip" + std::to_string(i) + ".cbam";
        skip_cbam_[i].mlp = make_ca(name + ".mlp", w[i], config_.cbam_reduction, rng);
        Conv sp = make_conv(name + ".spatial", 2, 1, config_.cbam_spatial_kernel, rng);
        skip_cbam_[i].spatial_w = sp.w;
        skip_cbam_[i].spatial_b = sp.b;
      }
    }

    for (int i = 2; i >= 0; --i) {
      const std::string lvl = "dec" + std::to_string(i);
      const Index c_in = (i == 2) ? w[2] : w[i + 1];
      Conv up = make_conv(lvl + ".up", c_in, 4 * w[i], 3, rng);
      dec_[i].up_w = up.w;
      dec_[i].up_b = up.b;
      Conv merge = make_conv(lvl + ".merge", 2 * w[i], w[i], 3, rng);
      dec_[i].merge_w = merge.w;
      dec_[i].merge_b = merge.b;
      dec_[i].rcabs = make_rcab_chain(lvl, w[i], rng);
      Conv head = make_conv(lvl + ".head", w[i], 3, 3, rng);
      head.w.value().array() *= Scalar(0.1);  // hypervision starts near zero
      dec_[i].head_w = head.w;
      dec_[i].head_b = head.b;
    }

    // Residual start: the fusion conv begins as the identity over the input
    // channels plus small mixing noise, so a fresh model reproduces its input
    // instead of He-scale noise and training corrects the image from step one.
    fuse_ = make_conv("fuse", 12, 3, 3, rng);
    fuse_.w.value().array() *= Scalar(0.1);
    for (Index o = 0; o < 3; ++o) fuse_.w.value()(o, 9 + o, 1, 1) += Scalar(1);
  }
};

template <typename Scalar>
HyperVisionNet<Scalar> build_model(const ModelConfig& config, std::uint64_t seed) {
  return HyperVisionNet<Scalar>(config, seed);
}

template <typename Scalar>
Index count_parameters(const HyperVisionNet<Scalar>& model) {
  return model.parameter_count();
}

}  // namespace demoire
