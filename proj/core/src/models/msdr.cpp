#include "mb2d/models/msdr.hpp"

#include "mb2d/errors.hpp"
#include "mb2d/image.hpp"

namespace mb2d::models {

UNetSpec MsdrConfig::backbone() const {
  UNetSpec s;
  s.levels = levels;
  s.base_channels = base_channels;
  s.in_channels = 3 + (neighbor_frames ? 6 : 0) + 3 * more_blur_inputs + 3 + crfm_channels;
  s.out_channels = 3;
  s.feature_channels = 0;
  return s;
}

void MsdrConfig::validate() const {
  if (scales < 1) throw ConfigError("msdr: scales must be >= 1");
  if (more_blur_inputs < 0 || crfm_channels < 0) throw ConfigError("msdr: input counts must be >= 0");
  backbone().validate();
}

template <class T>
Msdr<T>::Msdr(const MsdrConfig& config, std::uint64_t seed)
    : config_((config.validate(), config)), net_(config.backbone(), seed) {}

template <class T>
nn::Var<T> Msdr<T>::step(nn::Graph<T>& g, const MsdrInputs<T>& in, const nn::Var<T>& estimate) const {
  if (!in.center) throw ValidationError("msdr: missing centre frame");
  const nn::Shape& ref = in.center->value.shape();
  auto check = [&](const nn::Var<T>& v, int channels, const char* what) {
    if (!v) throw ValidationError(std::string("msdr: missing ") + what);
    const nn::Shape& s = v->value.shape();
    if (!s.same_spatial(ref) || s.c != channels)
      throw ValidationError(std::string("msdr: ") + what + " " + s.str() + " does not match scale input " +
                            ref.str());
  };
  check(in.center, 3, "centre frame");
  check(estimate, 3, "estimate");
  std::vector<nn::Var<T>> parts{in.center};
  if (config_.neighbor_frames) {
    check(in.prev, 3, "previous frame");
    check(in.next, 3, "next frame");
    parts.push_back(in.prev);
    parts.push_back(in.next);
  }
  if (static_cast<int>(in.more_blur.size()) != config_.more_blur_inputs)
    throw ValidationError("msdr: expected " + std::to_string(config_.more_blur_inputs) +
                          " more-blurred inputs, got " + std::to_string(in.more_blur.size()));
  for (const auto& b : in.more_blur) {
    check(b, 3, "more-blurred image");
    parts.push_back(b);
  }
  parts.push_back(estimate);
  if (config_.crfm_channels > 0) {
    check(in.crfm, config_.crfm_channels, "CRFM");
    parts.push_back(in.crfm);
  }
  const auto out = net_.forward(g, g.concat(std::span<const nn::Var<T>>(parts)));
  return g.clamp01(g.add(estimate, out.image));
}

template <class T>
MsdrInputs<T> Msdr<T>::downsample(nn::Graph<T>& g, const MsdrInputs<T>& full, int scale) const {
  const nn::Shape& s = full.center->value.shape();
  const int h = scale_extent(s.h, scale);
  const int w = scale_extent(s.w, scale);
  auto down = [&](const nn::Var<T>& v) { return v ? g.resize(v, h, w) : v; };
  MsdrInputs<T> out;
  out.center = down(full.center);
  out.prev = down(full.prev);
  out.next = down(full.next);
  for (const auto& b : full.more_blur) out.more_blur.push_back(down(b));
  out.crfm = down(full.crfm);
  return out;
}

template <class T>
MsdrOutput<T> Msdr<T>::run(nn::Graph<T>& g, const MsdrInputs<T>& full) const {
  if (!full.center) throw ValidationError("msdr: missing centre frame");
  const nn::Shape& s = full.center->value.shape();
  if (s.h % config_.spatial_multiple() != 0 || s.w % config_.spatial_multiple() != 0)
    throw ValidationError("msdr: input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                          " not divisible by " + std::to_string(config_.spatial_multiple()));
  MsdrOutput<T> out;
  out.by_scale.resize(static_cast<std::size_t>(config_.scales));
  nn::Var<T> previous;
  for (int scale = config_.scales; scale >= 1; --scale) {
    const auto in = downsample(g, full, scale);
    const nn::Shape& cs = in.center->value.shape();
    const nn::Var<T> estimate = previous ? g.resize(previous, cs.h, cs.w) : in.center;
    previous = step(g, in, estimate);
    out.by_scale[static_cast<std::size_t>(scale - 1)] = previous;
    out.networks.push_back(&net_);
  }
  return out;
}

void to_json(nlohmann::json& j, const MsdrConfig& c) {
  j = nlohmann::json{{"levels", c.levels},
                     {"base_channels", c.base_channels},
                     {"scales", c.scales},
                     {"neighbor_frames", c.neighbor_frames},
                     {"more_blur_inputs", c.more_blur_inputs},
                     {"crfm_channels", c.crfm_channels}};
}

void from_json(const nlohmann::json& j, MsdrConfig& c) {
  c.levels = j.at("levels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.scales = j.at("scales").get<int>();
  c.neighbor_frames = j.at("neighbor_frames").get<bool>();
  c.more_blur_inputs = j.at("more_blur_inputs").get<int>();
  c.crfm_channels = j.at("crfm_channels").get<int>();
}

template class Msdr<float>;
template class Msdr<double>;

}  // namespace mb2d::models
