#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mb2d::nn {

/// Tensor extents. Storage order is channel-major: [c][n][h][w], so a channel
/// block holds one plane per batch item and channel concatenation is a plain
/// append.
struct Shape {
  int c = 0;
  int n = 0;
  int h = 0;
  int w = 0;

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t channel_stride() const { return plane() * n; }
  std::size_t size() const { return channel_stride() * c; }
  bool same_spatial(const Shape& o) const { return n == o.n && h == o.h && w == o.w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  /// Pointer to the (channel, batch item) plane.
  T* plane(int c, int n) { return data_.data() + c * shape_.channel_stride() + n * shape_.plane(); }
  const T* plane(int c, int n) const {
    return data_.data() + c * shape_.channel_stride() + n * shape_.plane();
  }

  T& at(int c, int n, int y, int x) { return plane(c, n)[static_cast<std::size_t>(y) * shape_.w + x]; }
  T at(int c, int n, int y, int x) const {
    return plane(c, n)[static_cast<std::size_t>(y) * shape_.w + x];
  }

  void fill(T value);

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <class T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

}  // namespace mb2d::nn
