#pragma once

#include <cstdint>
#include <span>

#include <nlohmann/json.hpp>

#include "mb2d/models/unet.hpp"

namespace mb2d::models {

/// Single-pass U-Net deblurrer over a stack of 3-channel inputs; the residual
/// is added to the first input.
struct OneStageConfig {
  int levels = 3;
  int base_channels = 8;
  int inputs = 1;

  UNetSpec backbone() const { return {levels, base_channels, 3 * inputs, 3, 0}; }
  bool operator==(const OneStageConfig&) const = default;
};

template <class T>
class OneStage {
 public:
  OneStage(const OneStageConfig& config, std::uint64_t seed) : config_(config), net_(config.backbone(), seed) {}

  nn::Var<T> forward(nn::Graph<T>& g, std::span<const nn::Var<T>> images) const {
    const auto out = net_.forward(g, g.concat(images));
    return g.clamp01(g.add(images.front(), out.image));
  }

  const OneStageConfig& config() const { return config_; }
  const UNet<T>& network() const { return net_; }
  std::vector<nn::Var<T>> parameters() const { return net_.parameters(); }

 private:
  OneStageConfig config_;
  UNet<T> net_;
};

inline void to_json(nlohmann::json& j, const OneStageConfig& c) {
  j = nlohmann::json{{"levels", c.levels}, {"base_channels", c.base_channels}, {"inputs", c.inputs}};
}

inline void from_json(const nlohmann::json& j, OneStageConfig& c) {
  c.levels = j.at("levels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.inputs = j.at("inputs").get<int>();
}

}  // namespace mb2d::models
