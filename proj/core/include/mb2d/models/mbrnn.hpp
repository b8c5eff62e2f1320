#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/models/unet.hpp"

namespace mb2d::models {

struct MbrnnConfig {
  int levels = 3;
  int base_channels = 8;
  /// Channels of each recurrent feature map F^k.
  int feature_channels = 8;
  /// 3: B^n_{t-1,t,t+1}; 1: the centre frame only.
  int input_frames = 3;
  int iterations = 3;

  UNetSpec backbone() const;
  int crfm_channels() const { return iterations * feature_channels; }
  void validate() const;
  bool operator==(const MbrnnConfig&) const = default;
};

template <class T>
struct MbrnnStep {
  nn::Var<T> blur;      // \hat B^{n+2k}_t, clamped to [0,1]
  nn::Var<T> features;  // F^k
};

template <class T>
struct MbrnnUnroll {
  std::vector<nn::Var<T>> blurs;
  std::vector<nn::Var<T>> features;
  nn::Var<T> crfm;  // channel concat of features
  /// Network evaluated at each iteration (one shared object).
  std::vector<const UNet<T>*> networks;
};

/// Progressive multi-blurring recurrence. Every iteration adds a predicted
/// residual to the previous blur estimate; all iterations share one U-Net.
template <class T>
class Mbrnn {
 public:
  Mbrnn(const MbrnnConfig& config, std::uint64_t seed);

  /// One recurrence step. `frames` holds input_frames 3-channel images.
  MbrnnStep<T> step(nn::Graph<T>& g, std::span<const nn::Var<T>> frames, const nn::Var<T>& prev_blur,
                    const nn::Var<T>& prev_features) const;

  /// Starts from prev_blur = centre frame, prev_features = 0.
  MbrnnUnroll<T> unroll(nn::Graph<T>& g, std::span<const nn::Var<T>> frames) const;

  const MbrnnConfig& config() const { return config_; }
  const UNet<T>& network() const { return net_; }
  std::vector<nn::Var<T>> parameters() const { return net_.parameters(); }

 private:
  MbrnnConfig config_;
  UNet<T> net_;
};

void to_json(nlohmann::json& j, const MbrnnConfig& c);
void from_json(const nlohmann::json& j, MbrnnConfig& c);

}  // namespace mb2d::models
