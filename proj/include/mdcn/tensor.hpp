#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "mdcn/errors.hpp"

namespace mdcn {

using std::int64_t;

using Shape4 = std::array<int64_t, 4>;

inline std::string shape_str(const Shape4& s) {
  std::ostringstream os;
  os << s[0] << "x" << s[1] << "x" << s[2] << "x" << s[3];
  return os.str();
}

/// Dense NCHW tensor. Row-major: element (n,c,h,w) lives at flat offset
/// ((n*C + c)*H + h)*W + w. Scalar is float for training/inference and
/// double for gradient-check mode.
template <typename Scalar>
class Tensor {
 public:
  Tensor() : shape_{0, 0, 0, 0} {}

  Tensor(int64_t n, int64_t c, int64_t h, int64_t w) : shape_{n, c, h, w} {
    if (n < 0 || c < 0 || h < 0 || w < 0)
      throw ShapeError("negative tensor extent: " + shape_str(shape_));
    data_.assign(static_cast<size_t>(n * c * h * w), Scalar(0));
  }

  explicit Tensor(const Shape4& s) : Tensor(s[0], s[1], s[2], s[3]) {}

  static Tensor full(int64_t n, int64_t c, int64_t h, int64_t w, Scalar v) {
    Tensor t(n, c, h, w);
    t.data_.assign(t.data_.size(), v);
    return t;
  }

  int64_t n() const { return shape_[0]; }
  int64_t c() const { return shape_[1]; }
  int64_t h() const { return shape_[2]; }
  int64_t w() const { return shape_[3]; }
  const Shape4& shape() const { return shape_; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  int64_t offset(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  Scalar operator()(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(offset(n, c, h, w))];
  }
  Scalar& operator()(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(offset(n, c, h, w))];
  }

  // Pointer to the start of channel plane (n,c); H*W contiguous values.
  Scalar* plane(int64_t n, int64_t c) { return data_.data() + offset(n, c, 0, 0); }
  const Scalar* plane(int64_t n, int64_t c) const { return data_.data() + offset(n, c, 0, 0); }

  std::vector<Scalar>& data() { return data_; }
  const std::vector<Scalar>& data() const { return data_; }

  void fill(Scalar v) { data_.assign(data_.size(), v); }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(shape_[0], shape_[1], shape_[2], shape_[3]);
    for (size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<T>(data_[i]);
    return out;
  }

 private:
  Shape4 shape_;
  std::vector<Scalar> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

}  // namespace mdcn
