#include "mb2d/models/tensor_io.hpp"

#include "mb2d/errors.hpp"

namespace mb2d::models {

template <class T>
nn::Tensor<T> to_tensor(std::span<const Image* const> batch) {
  if (batch.empty()) throw ValidationError("to_tensor: empty batch");
  const Image& first = *batch.front();
  nn::Tensor<T> out(nn::Shape{first.channels, static_cast<int>(batch.size()), first.height, first.width});
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Image& img = *batch[n];
    if (!img.same_dims(first)) throw ValidationError("to_tensor: images in a batch differ in size");
    for (int c = 0; c < img.channels; ++c) {
      T* dst = out.plane(c, static_cast<int>(n));
      for (std::size_t i = 0, count = static_cast<std::size_t>(img.width) * img.height; i < count; ++i)
        dst[i] = static_cast<T>(img.pixels[i * img.channels + c]);
    }
  }
  return out;
}

template <class T>
Image to_image(const nn::Tensor<T>& t, int n) {
  const nn::Shape& s = t.shape();
  if (n < 0 || n >= s.n) throw RangeError("to_image: batch index out of range");
  Image img(s.w, s.h, s.c);
  for (int c = 0; c < s.c; ++c) {
    const T* src = t.plane(c, n);
    for (std::size_t i = 0, count = s.plane(); i < count; ++i)
      img.pixels[i * s.c + c] = static_cast<float>(src[i]);
  }
  return img;
}

template nn::Tensor<float> to_tensor<float>(std::span<const Image* const>);
template nn::Tensor<double> to_tensor<double>(std::span<const Image* const>);
template Image to_image<float>(const nn::Tensor<float>&, int);
template Image to_image<double>(const nn::Tensor<double>&, int);

}  // namespace mb2d::models
