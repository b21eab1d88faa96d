#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "demoire/losses.hpp"
#include "demoire/network.hpp"
#include "grad_check.hpp"

using namespace demoire;
using testutil::random_tensor;

namespace {

ModelConfig toy_config() {
  ModelConfig c;
  c.level_widths = {4, 4, 4};
  c.rcabs_per_level = 1;
  c.cbam_spatial_kernel = 3;
  return c;
}

template <typename T>
Var<T>* find_param(HyperVisionNet<T>& m, const std::string& name) {
  for (auto& [n, v] : m.parameters())
    if (n == name) return &v;
  return nullptr;
}

template <typename T>
void zero_all(HyperVisionNet<T>& m) {
  for (auto& [n, v] : m.parameters()) v.node_->value.set_zero();
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c;
  c.validate();
  c.level_widths = {16, 2, 64};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.rcabs_per_level = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.cbam_spatial_kernel = 6;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.ca_reduction = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(HyperVisionNet<float>(c, 0), ConfigError);
}

TEST_CASE("forward shape contract") {
  HyperVisionNet<float> net(toy_config(), 1);

  SUBCASE("square input") {
    auto out = net.forward(random_tensor<float>({1, 3, 16, 16}, 2, 0.0f, 1.0f));
    CHECK(out.final.shape() == Shape4{1, 3, 16, 16});
    CHECK(out.hypervision[0].shape() == Shape4{1, 3, 4, 4});
    CHECK(out.hypervision[1].shape() == Shape4{1, 3, 8, 8});
    CHECK(out.hypervision[2].shape() == Shape4{1, 3, 16, 16});
    CHECK(out.final.all_finite());
  }
  SUBCASE("batched rectangular input") {
    auto out = net.forward(random_tensor<float>({2, 3, 16, 24}, 3, 0.0f, 1.0f));
    CHECK(out.final.shape() == Shape4{2, 3, 16, 24});
    for (int k = 0; k < 3; ++k) {
      const Index scale = Index(1) << (2 - k);
      CHECK(out.hypervision[k].shape() == Shape4{2, 3, 16 / scale, 24 / scale});
    }
  }
  SUBCASE("minimum size 8x8") {
    CHECK(net.forward(random_tensor<float>({1, 3, 8, 8}, 4, 0.0f, 1.0f)).final.shape() ==
          Shape4{1, 3, 8, 8});
  }
  SUBCASE("rejects indivisible dims naming the offender") {
    CHECK_THROWS_WITH_AS(net.forward(Tensor<float>::zeros(1, 3, 48, 50)),
                         doctest::Contains("width 50"), ShapeError);
    CHECK_THROWS_WITH_AS(net.forward(Tensor<float>::zeros(1, 3, 50, 48)),
                         doctest::Contains("height 50"), ShapeError);
    CHECK_THROWS_AS(net.forward(Tensor<float>::zeros(1, 4, 16, 16)), ShapeError);
  }
  SUBCASE("resolution invariance of one instance") {
    CHECK(net.forward(Tensor<float>::zeros(1, 3, 8, 8)).final.shape() == Shape4{1, 3, 8, 8});
    CHECK(net.forward(Tensor<float>::zeros(1, 3, 24, 8)).final.shape() == Shape4{1, 3, 24, 8});
  }
}

TEST_CASE("parameter counting") {
  SUBCASE("deterministic across builds") {
    HyperVisionNet<float> a(ModelConfig{}, 0);
    HyperVisionNet<float> b(ModelConfig{}, 7);
    CHECK(a.parameter_count() == b.parameter_count());
    CHECK(count_parameters(a) == a.parameter_count());
  }
  SUBCASE("default lands in the expected band") {
    HyperVisionNet<float> net(ModelConfig{}, 0);
    CHECK(net.parameter_count() >= 1000000);
    CHECK(net.parameter_count() <= 2500000);
  }
  SUBCASE("each ablation strictly reduces the count") {
    const Index base = HyperVisionNet<float>(ModelConfig{}, 0).parameter_count();
    ModelConfig c;
    c.use_coord = false;
    CHECK(HyperVisionNet<float>(c, 0).parameter_count() < base);
    c = ModelConfig{};
    c.use_cbam_skips = false;
    CHECK(HyperVisionNet<float>(c, 0).parameter_count() < base);
    c = ModelConfig{};
    c.use_channel_attention = false;
    CHECK(HyperVisionNet<float>(c, 0).parameter_count() < base);
  }
  SUBCASE("coord ablation removes exactly the extra head taps") {
    ModelConfig c = toy_config();
    const Index with = HyperVisionNet<float>(c, 0).parameter_count();
    c.use_coord = false;
    const Index without = HyperVisionNet<float>(c, 0).parameter_count();
    CHECK(with - without == 2 * 9 * Index(toy_config().level_widths[0]));
  }
  SUBCASE("deep supervision adds no parameters") {
    ModelConfig c = toy_config();
    c.deep_supervision = true;
    CHECK(HyperVisionNet<float>(c, 0).parameter_count() ==
          HyperVisionNet<float>(toy_config(), 0).parameter_count());
  }
}

TEST_CASE("parameter naming") {
  HyperVisionNet<float> net(toy_config(), 0);
  std::set<std::string> names;
  for (const auto& [n, v] : net.parameters()) {
    CHECK(names.insert(n).second);  // unique
    CHECK(v.requires_grad());
  }
  CHECK(names.count("head.conv1.weight") == 1);
  CHECK(names.count("head.conv2.bias") == 1);
  CHECK(names.count("enc0.rcab0.block0.conv.weight") == 1);
  CHECK(names.count("enc0.rcab0.block0.ca.reduce.weight") == 1);
  CHECK(names.count("enc2.down.weight") == 1);
  CHECK(names.count("bottleneck.rcab0.fuse.weight") == 1);
  CHECK(names.count("skip0.cbam.spatial.weight") == 1);
  CHECK(names.count("dec1.up.weight") == 1);
  CHECK(names.count("dec0.head.bias") == 1);
  CHECK(names.count("fuse.weight") == 1);
  CHECK(names.count("fuse.bias") == 1);
  CHECK(net.describe().size() == net.parameters().size());

  ModelConfig c = toy_config();
  c.use_cbam_skips = false;
  HyperVisionNet<float> ablated(c, 0);
  for (const auto& [n, v] : ablated.parameters()) CHECK(n.find("cbam") == std::string::npos);
  c = toy_config();
  c.use_channel_attention = false;
  HyperVisionNet<float> noca(c, 0);
  for (const auto& [n, v] : noca.parameters()) CHECK(n.find(".ca.") == std::string::npos);
}

TEST_CASE("seeded initialization") {
  HyperVisionNet<float> a(toy_config(), 42);
  HyperVisionNet<float> b(toy_config(), 42);
  HyperVisionNet<float> c(toy_config(), 43);
  REQUIRE(a.parameters().size() == b.parameters().size());
  bool any_diff = false;
  for (size_t i = 0; i < a.parameters().size(); ++i) {
    const auto& ta = a.parameters()[i].second.value();
    const auto& tb = b.parameters()[i].second.value();
    const auto& tc = c.parameters()[i].second.value();
    REQUIRE(ta.shape() == tb.shape());
    for (Index j = 0; j < ta.size(); ++j) {
      CHECK(ta.data()[j] == tb.data()[j]);
      if (ta.data()[j] != tc.data()[j]) any_diff = true;
    }
  }
  CHECK(any_diff);

  // biases start at zero, weights do not
  for (const auto& [n, v] : a.parameters()) {
    if (n.ends_with(".bias")) {
      for (Index j = 0; j < v.value().size(); ++j) CHECK(v.value().data()[j] == 0.0f);
    }
  }

  Tensor<float> x = random_tensor<float>({1, 3, 16, 16}, 44, 0.0f, 1.0f);
  auto fa = a.forward(x);
  auto fb = b.forward(x);
  for (Index i = 0; i < fa.final.size(); ++i) CHECK(fa.final.data()[i] == fb.final.data()[i]);
}

TEST_CASE("fusion wiring") {
  SUBCASE("zero fusion conv zeroes the final output") {
    HyperVisionNet<float> net(toy_config(), 5);
    find_param(net, "fuse.weight")->node_->value.set_zero();
    find_param(net, "fuse.bias")->node_->value.set_zero();
    auto out = net.forward(random_tensor<float>({1, 3, 8, 8}, 6, 0.0f, 1.0f));
    for (Index i = 0; i < out.final.size(); ++i) CHECK(out.final.data()[i] == 0.0f);
  }
  SUBCASE("identity taps on the input channels reproduce the input") {
    HyperVisionNet<float> net(toy_config(), 7);
    zero_all(net);
    Tensor<float>& fw = find_param(net, "fuse.weight")->node_->value;
    REQUIRE(fw.shape() == Shape4{3, 12, 3, 3});
    for (Index o = 0; o < 3; ++o) fw(o, 9 + o, 1, 1) = 1.0f;
    Tensor<float> x = random_tensor<float>({2, 3, 16, 16}, 8, 0.1f, 0.9f);
    auto out = net.forward(x);
    for (Index i = 0; i < x.size(); ++i) CHECK(out.final.data()[i] == x.data()[i]);
    // hypervision heads are zeroedled by the zero weights
    for (int k = 0; k < 3; ++k)
      for (Index i = 0; i < out.hypervision[k].size(); ++i)
        CHECK(out.hypervision[k].data()[i] == 0.0f);
    // and infer leaves in-range values untouched
    Tensor<float> restored = net.infer(x);
    for (Index i = 0; i < x.size(); ++i) CHECK(restored.data()[i] == x.data()[i]);
  }
  SUBCASE("infer clamps out-of-range values") {
    HyperVisionNet<float> net(toy_config(), 9);
    zero_all(net);
    find_param(net, "fuse.bias")->node_->value.array() = 10.0f;
    Tensor<float> x = random_tensor<float>({1, 3, 8, 8}, 10, 0.0f, 1.0f);
    auto raw = net.forward(x);
    CHECK(raw.final.data()[0] == 10.0f);
    Tensor<float> restored = net.infer(x);
    for (Index i = 0; i < restored.size(); ++i) CHECK(restored.data()[i] == 1.0f);
  }
}

TEST_CASE("gradients reach every parameter") {
  // reduction 1 keeps the attention bottlenecks wide enough that no gate is
  // born dead; a 1-unit hidden layer behind a zero-bias relu would zero its
  // own upstream gradients about half the time, which is init math, not a
  // wiring defect
  ModelConfig cfg;
  cfg.level_widths = {8, 8, 8};
  cfg.rcabs_per_level = 1;
  cfg.ca_reduction = 1;
  cfg.cbam_reduction = 1;
  cfg.cbam_spatial_kernel = 3;
  HyperVisionNet<double> net(cfg, 11);
  Tensor<double> x = random_tensor<double>({1, 3, 16, 16}, 12, 0.0, 1.0);
  Tensor<double> gt = random_tensor<double>({1, 3, 16, 16}, 13, 0.0, 1.0);

  auto out = net.forward_vars(Var<double>::constant(x));
  auto loss = total_loss(out.final, Var<double>::constant(gt), SsimParams<double>{});
  loss.objective.backward();

  for (const auto& [name, v] : net.parameters()) {
    INFO("parameter ", name);
    REQUIRE(v.node_->has_grad());
    double mag = 0;
    for (Index i = 0; i < v.node_->grad.size(); ++i) mag = std::max(mag, std::abs(v.node_->grad.data()[i]));
    CHECK(mag > 0.0);
  }

  // the default toy still wires every array into the tape
  HyperVisionNet<double> toy(toy_config(), 16);
  auto tout = toy.forward_vars(Var<double>::constant(x));
  total_loss(tout.final, Var<double>::constant(gt), SsimParams<double>{}).objective.backward();
  for (const auto& [name, v] : toy.parameters()) {
    INFO("parameter ", name);
    CHECK(v.node_->has_grad());
  }
}

TEST_CASE("ablation flags change structure not contract") {
  for (int flag = 0; flag < 3; ++flag) {
    ModelConfig c = toy_config();
    if (flag == 0) c.use_coord = false;
    if (flag == 1) c.use_cbam_skips = false;
    if (flag == 2) c.use_channel_attention = false;
    HyperVisionNet<float> net(c, 14);
    auto out = net.forward(random_tensor<float>({1, 3, 16, 16}, 15, 0.0f, 1.0f));
    CHECK(out.final.shape() == Shape4{1, 3, 16, 16});
    CHECK(out.final.all_finite());
  }
}
