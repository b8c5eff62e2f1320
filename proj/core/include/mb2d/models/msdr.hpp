#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/models/unet.hpp"

namespace mb2d::models {

/// Multi-scale deblurring network. The input set is configurable so the
/// frame/more-blur/CRFM ablation arms share one implementation.
struct MsdrConfig {
  int levels = 3;
  int base_channels = 8;
  int scales = 3;
  /// Also feed B^n_{t-1} and B^n_{t+1}.
  bool neighbor_frames = false;
  /// Number of predicted more-blurred images fed in (0 disables).
  int more_blur_inputs = 3;
  /// CRFM channel count (0 disables).
  int crfm_channels = 24;

  UNetSpec backbone() const;
  /// Full-resolution inputs must be multiples of this.
  int spatial_multiple() const { return (1 << (levels - 1)) << (scales - 1); }
  void validate() const;
  bool operator==(const MsdrConfig&) const = default;
};

template <class T>
struct MsdrInputs {
  nn::Var<T> center;
  nn::Var<T> prev;
  nn::Var<T> next;
  std::vector<nn::Var<T>> more_blur;
  nn::Var<T> crfm;
};

template <class T>
struct MsdrOutput {
  /// by_scale[s - 1] is the restored image at scale s.
  std::vector<nn::Var<T>> by_scale;
  std::vector<const UNet<T>*> networks;
};

template <class T>
class Msdr {
 public:
  Msdr(const MsdrConfig& config, std::uint64_t seed);

  /// One scale: residual added to `estimate`, clamped. All inputs must already
  /// be at this scale's resolution.
  nn::Var<T> step(nn::Graph<T>& g, const MsdrInputs<T>& at_scale, const nn::Var<T>& estimate) const;

  /// Bilinear downsampling of every input to pyramid scale s (1-based).
  MsdrInputs<T> downsample(nn::Graph<T>& g, const MsdrInputs<T>& full, int scale) const;

  /// Coarse to fine; the coarsest estimate is the downsampled centre frame.
  MsdrOutput<T> run(nn::Graph<T>& g, const MsdrInputs<T>& full) const;

  const MsdrConfig& config() const { return config_; }
  const UNet<T>& network() const { return net_; }
  std::vector<nn::Var<T>> parameters() const { return net_.parameters(); }

 private:
  MsdrConfig config_;
  UNet<T> net_;
};

void to_json(nlohmann::json& j, const MsdrConfig& c);
void from_json(const nlohmann::json& j, MsdrConfig& c);

}  // namespace mb2d::models
