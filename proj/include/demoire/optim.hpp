#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "demoire/graph.hpp"

namespace demoire {

/// Adam with bias correction. Moment buffers are parallel to the model's
/// parameter registry and round-trip through checkpoints for exact resume.
template <typename Scalar>
class Adam {
 public:
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  void init(const std::vector<std::pair<std::string, Var<Scalar>>>& params) {
    step_ = 0;
    m_.clear();
    v_.clear();
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& [name, p] : params) {
      m_.push_back(Tensor<Scalar>::zeros(p.shape()));
      v_.push_back(Tensor<Scalar>::zeros(p.shape()));
    }
  }

  bool initialized() const { return !m_.empty(); }
  std::uint64_t step() const { return step_; }
  std::vector<Tensor<Scalar>>& moment1() { return m_; }
  std::vector<Tensor<Scalar>>& moment2() { return v_; }
  const std::vector<Tensor<Scalar>>& moment1() const { return m_; }
  const std::vector<Tensor<Scalar>>& moment2() const { return v_; }
  void set_step(std::uint64_t s) { step_ = s; }

  /// One update over all parameters that received a gradient this pass.
  void update(std::vector<std::pair<std::string, Var<Scalar>>>& params, Scalar lr) {
    if (m_.size() != params.size()) {
      throw std::logic_error("Adam state not initialized for this parameter set");
    }
    ++step_;
    const Scalar c1 = Scalar(1) - Scalar(std::pow(double(beta1), double(step_)));
    const Scalar c2 = Scalar(1) - Scalar(std::pow(double(beta2), double(step_)));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Var<Scalar>& p = params[i].second;
      if (!p.node_->has_grad()) continue;
      const auto& g = p.node_->grad.array();
      auto& m = m_[i].array();
      auto& v = v_[i].array();
      m = beta1 * m + (Scalar(1) - beta1) * g;
      v = beta2 * v + (Scalar(1) - beta2) * g.square();
      p.value().array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
    }
  }

 private:
  std::uint64_t step_ = 0;
  std::vector<Tensor<Scalar>> m_;
  std::vector<Tensor<Scalar>> v_;
};

}  // namespace demoire
