#pragma once

#include <span>
#include <vector>

#include "mb2d/image.hpp"
#include "mb2d/nn/tensor.hpp"

namespace mb2d::models {

/// Stacks same-sized images into one [channels, batch, h, w] tensor.
template <class T>
nn::Tensor<T> to_tensor(std::span<const Image* const> batch);

template <class T>
nn::Tensor<T> to_tensor(const Image& img) {
  const Image* p = &img;
  return to_tensor<T>(std::span<const Image* const>(&p, 1));
}

/// Batch item `n` of a tensor as an image (channels must be 1 or 3).
template <class T>
Image to_image(const nn::Tensor<T>& t, int n = 0);

}  // namespace mb2d::models
