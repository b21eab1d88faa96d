#pragma once

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "demoire/errors.hpp"

namespace demoire {

using Index = Eigen::Index;

/// Shape of a rank-4 feature map in N x C x H x W order.
struct Shape4 {
  Index n = 0;
  Index c = 0;
  Index h = 0;
  Index w = 0;

  Index count() const { return n * c * h * w; }
  bool operator==(const Shape4&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
  }
};

/// Dense rank-4 array (batch, channels, height, width), contiguous with W
/// fastest. Backed by an Eigen array so elementwise work stays expression
/// based.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;

  Tensor(Index n, Index c, Index h, Index w) { resize({n, c, h, w}); }

  explicit Tensor(const Shape4& s) { resize(s); }

  static Tensor zeros(const Shape4& s) {
    Tensor t(s);
    t.set_zero();
    return t;
  }

  static Tensor zeros(Index n, Index c, Index h, Index w) {
    return zeros(Shape4{n, c, h, w});
  }

  static Tensor constant(const Shape4& s, Scalar v) {
    Tensor t(s);
    t.data_.setConstant(v);
    return t;
  }

  void resize(const Shape4& s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
      throw std::invalid_argument("tensor dimensions must be positive, got " + s.str());
    }
    shape_ = s;
    data_.resize(s.count());
  }

  const Shape4& shape() const { return shape_; }
  Index n() const { return shape_.n; }
  Index c() const { return shape_.c; }
  Index h() const { return shape_.h; }
  Index w() const { return shape_.w; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar& operator()(Index n, Index c, Index h, Index w) {
    return data_[offset(n, c, h, w)];
  }
  Scalar operator()(Index n, Index c, Index h, Index w) const {
    return data_[offset(n, c, h, w)];
  }

  Index offset(Index n, Index c, Index h, Index w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  void set_zero() { data_.setZero(); }

  bool all_finite() const {
    for (Index i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) return false;
    }
    return true;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    out.array() = data_.template cast<Other>();
    return out;
  }

 private:
  Shape4 shape_;
  Storage data_;
};

inline void require_same_shape(const Shape4& a, const Shape4& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

}  // namespace demoire
