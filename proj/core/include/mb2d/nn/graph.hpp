#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "mb2d/nn/tensor.hpp"

namespace mb2d::nn {

/// One value in a computation. Leaves created by make_parameter() carry
/// gradients across steps; intermediate nodes live as long as the Graph that
/// produced them.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::function<void(Node&)> backward_fn;

  Tensor<T>& ensure_grad() {
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
Var<T> make_parameter(Tensor<T> init) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(init);
  node->requires_grad = true;
  return node;
}

/// Reverse-mode tape. Every op appends a node; backward() walks the tape in
/// reverse. With record == false no closures are kept, which is the inference
/// path.
template <class T>
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}

  bool recording() const { return record_; }

  Var<T> constant(Tensor<T> value) const;

  /// 3x3 convolution, zero padding 1. Weight is [cout][cin*9], bias [cout].
  Var<T> conv3x3(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride);
  Var<T> leaky_relu(const Var<T>& x, T slope);
  /// Bilinear resampling with half-pixel centres and edge clamping.
  Var<T> resize(const Var<T>& x, int height, int width);
  Var<T> concat(std::span<const Var<T>> parts);
  Var<T> concat(std::initializer_list<Var<T>> parts) {
    std::vector<Var<T>> v(parts);
    return concat(std::span<const Var<T>>(v));
  }
  Var<T> add(const Var<T>& a, const Var<T>& b);
  Var<T> clamp01(const Var<T>& x);
  /// Mean absolute difference over every element; returns a 1-element node.
  Var<T> l1_mean(const Var<T>& a, const Var<T>& b);
  Var<T> sum(std::span<const Var<T>> scalars);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded node.
  void backward(const Var<T>& loss);

  std::size_t tape_size() const { return tape_.size(); }

 private:
  Var<T> emit(Tensor<T> value, std::initializer_list<const Var<T>*> parents,
              std::function<void(Node<T>&)> fn);

  bool record_;
  std::vector<Var<T>> tape_;
};

/// Output extent of conv3x3 with the given stride.
inline int conv_out_extent(int extent, int stride) { return (extent - 1) / stride + 1; }

}  // namespace mb2d::nn
