#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mb2d/blur.hpp"
#include "mb2d/nn/tensor.hpp"

namespace mb2d::training {

/// Horizontal flip, then vertical flip, then `rot90` counter-clockwise turns.
struct Augment {
  bool flip_h = false;
  bool flip_v = false;
  int rot90 = 0;
};

Image apply(const Image& img, const Augment& aug);

/// Crops every image of a sample to the same window and applies one
/// augmentation to all of them.
BlurSample transform_sample(const BlurSample& s, int x0, int y0, int size, const Augment& aug);

/// A stacked batch; every tensor is [3, batch, h, w].
struct Batch {
  nn::Tensor<float> prev;
  nn::Tensor<float> center;
  nn::Tensor<float> next;
  nn::Tensor<float> sharp;
  std::vector<nn::Tensor<float>> targets;
  std::vector<std::string> ids;
};

Batch make_batch(std::span<const BlurSample* const> samples);
Batch make_batch(const BlurSample& sample);

std::string sample_id(const BlurSample& s);

struct SamplerOptions {
  int batch_size = 4;
  int crop_size = 64;
  bool flip_h = true;
  bool flip_v = true;
  bool rot90 = true;
  std::uint64_t seed = 0;
};

/// Seeded random crops and augmentations; sample order, crop offsets and
/// augmentations are a pure function of the seed.
class BatchSampler {
 public:
  BatchSampler(const std::vector<BlurSample>& samples, const SamplerOptions& options);
  Batch next();

 private:
  std::uint64_t draw(std::uint64_t bound) { return rng_() % bound; }

  const std::vector<BlurSample>& samples_;
  SamplerOptions options_;
  std::mt19937_64 rng_;
};

}  // namespace mb2d::training
