#include "mb2d/models/unet.hpp"

#include <cmath>
#include <random>

#include "mb2d/errors.hpp"

namespace mb2d::models {

void UNetSpec::validate() const {
  if (levels < 2) throw ConfigError("unet: levels must be >= 2, got " + std::to_string(levels));
  if (base_channels < 1) throw ConfigError("unet: base_channels must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("unet: channel counts must be >= 1");
  if (feature_channels < 0) throw ConfigError("unet: feature_channels must be >= 0");
}

namespace {

struct ConvLayout {
  int in = 0;
  int out = 0;
  std::string name;
};

// Conv order: encoder stages, decoder stages (deepest first), image head,
// optional feature head.
std::vector<ConvLayout> layout(const UNetSpec& s) {
  std::vector<ConvLayout> convs;
  int prev = s.in_channels;
  for (int l = 0; l < s.levels; ++l) {
    const int c = s.level_channels(l);
    convs.push_back({prev, c, "enc" + std::to_string(l) + ".0"});
    convs.push_back({c, c, "enc" + std::to_string(l) + ".1"});
    prev = c;
  }
  for (int l = s.levels - 2; l >= 0; --l) {
    const int c = s.level_channels(l);
    convs.push_back({prev + c, c, "dec" + std::to_string(l) + ".0"});
    convs.push_back({c, c, "dec" + std::to_string(l) + ".1"});
    prev = c;
  }
  convs.push_back({prev, s.out_channels, "head.image"});
  if (s.feature_channels > 0) convs.push_back({prev, s.feature_channels, "head.features"});
  return convs;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::int64_t unet_parameter_count(const UNetSpec& spec) {
  std::int64_t total = 0;
  for (const auto& c : layout(spec)) total += std::int64_t{9} * c.in * c.out + c.out;
  return total;
}

template <class T>
UNet<T>::UNet(const UNetSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  const auto convs = layout(spec_);
  const std::size_t heads = spec_.feature_channels > 0 ? 2 : 1;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto& c = convs[i];
    const bool head = i + heads >= convs.size();
    nn::Tensor<T> w(nn::Shape{c.out, 1, 1, c.in * 9});
    if (!head) {
      // He-uniform for the leaky ReLU that follows.
      const double gain = std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope));
      const double bound = gain * std::sqrt(3.0 / (9.0 * c.in));
      for (auto& v : w.span()) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
    }
    convs_.push_back({nn::make_parameter(std::move(w)),
                      nn::make_parameter(nn::Tensor<T>(nn::Shape{c.out, 1, 1, 1})), c.in, c.out,
                      c.name});
  }
  image_head_ = convs.size() - heads;
  feature_head_ = spec_.feature_channels > 0 ? convs.size() - 1 : 0;
}

template <class T>
UNetOutput<T> UNet<T>::forward(nn::Graph<T>& g, const nn::Var<T>& input) const {
  const nn::Shape& s = input->value.shape();
  if (s.c != spec_.in_channels)
    throw ValidationError("unet: expected " + std::to_string(spec_.in_channels) +
                          " input channels, got " + std::to_string(s.c));
  if (s.h % spec_.spatial_multiple() != 0 || s.w % spec_.spatial_multiple() != 0)
    throw ValidationError("unet: input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                          " not divisible by " + std::to_string(spec_.spatial_multiple()));
  const T slope = static_cast<T>(kLeakySlope);
  auto block = [&](std::size_t idx, const nn::Var<T>& x, int stride) {
    return g.leaky_relu(g.conv3x3(x, conv(idx).weight, conv(idx).bias, stride), slope);
  };

  std::vector<nn::Var<T>> skips;
  std::size_t idx = 0;
  nn::Var<T> x = input;
  for (int l = 0; l < spec_.levels; ++l) {
    x = block(idx++, x, l == 0 ? 1 : 2);
    x = block(idx++, x, 1);
    skips.push_back(x);
  }
  for (int l = spec_.levels - 2; l >= 0; --l) {
    const auto& skip = skips[static_cast<std::size_t>(l)];
    auto up = g.resize(x, skip->value.shape().h, skip->value.shape().w);
    x = block(idx++, g.concat({up, skip}), 1);
    x = block(idx++, x, 1);
  }
  UNetOutput<T> out;
  out.image = g.conv3x3(x, conv(image_head_).weight, conv(image_head_).bias, 1);
  if (spec_.feature_channels > 0)
    out.features = g.conv3x3(x, conv(feature_head_).weight, conv(feature_head_).bias, 1);
  return out;
}

template <class T>
std::vector<nn::Var<T>> UNet<T>::parameters() const {
  std::vector<nn::Var<T>> params;
  for (const auto& c : convs_) {
    params.push_back(c.weight);
    params.push_back(c.bias);
  }
  return params;
}

template <class T>
std::int64_t UNet<T>::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& c : convs_) total += static_cast<std::int64_t>(c.weight->value.size() + c.bias->value.size());
  return total;
}

template class UNet<float>;
template class UNet<double>;

}  // namespace mb2d::models
