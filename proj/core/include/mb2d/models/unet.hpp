#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mb2d/nn/graph.hpp"

namespace mb2d::models {

/// Architecture hyperparameters of the shared U-Net backbone.
struct UNetSpec {
  int levels = 3;
  int base_channels = 8;
  int in_channels = 3;
  int out_channels = 3;
  /// Channels of the auxiliary feature head; 0 disables it.
  int feature_channels = 0;

  /// Channel count of encoder level `level`.
  int level_channels(int level) const { return base_channels << level; }
  /// Input height/width must be a multiple of this.
  int spatial_multiple() const { return 1 << (levels - 1); }
  void validate() const;
  bool operator==(const UNetSpec&) const = default;
};

/// Exact number of learned scalars for a spec (3x3 kernels plus biases).
std::int64_t unet_parameter_count(const UNetSpec& spec);

template <class T>
struct Conv {
  nn::Var<T> weight;
  nn::Var<T> bias;
  int in_channels = 0;
  int out_channels = 0;
  std::string name;
};

template <class T>
struct UNetOutput {
  nn::Var<T> image;     // out_channels head
  nn::Var<T> features;  // feature head, null when feature_channels == 0
};

/// Encoder: `levels` stages, stage 0 at full resolution and each later stage
/// entered by a stride-2 conv; two conv+LeakyReLU per stage. Decoder:
/// bilinear upsample, concat skip, two conv+LeakyReLU. Heads are plain convs
/// and start at zero so a fresh network predicts a zero residual.
template <class T>
class UNet {
 public:
  UNet(const UNetSpec& spec, std::uint64_t seed);

  UNetOutput<T> forward(nn::Graph<T>& g, const nn::Var<T>& input) const;

  const UNetSpec& spec() const { return spec_; }
  const std::vector<Conv<T>>& convs() const { return convs_; }
  std::vector<nn::Var<T>> parameters() const;
  std::int64_t parameter_count() const;

 private:
  const Conv<T>& conv(std::size_t i) const { return convs_[i]; }

  UNetSpec spec_;
  std::vector<Conv<T>> convs_;
  std::size_t image_head_ = 0;
  std::size_t feature_head_ = 0;
};

inline constexpr double kLeakySlope = 0.1;

}  // namespace mb2d::models
