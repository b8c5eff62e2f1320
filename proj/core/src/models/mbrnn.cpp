#include "mb2d/models/mbrnn.hpp"

#include "mb2d/errors.hpp"

namespace mb2d::models {

UNetSpec MbrnnConfig::backbone() const {
  UNetSpec s;
  s.levels = levels;
  s.base_channels = base_channels;
  s.in_channels = 3 * input_frames + 3 + feature_channels;
  s.out_channels = 3;
  s.feature_channels = feature_channels;
  return s;
}

void MbrnnConfig::validate() const {
  if (input_frames != 1 && input_frames != 3)
    throw ConfigError("mbrnn: input_frames must be 1 or 3, got " + std::to_string(input_frames));
  if (iterations < 1) throw ConfigError("mbrnn: iterations must be >= 1");
  if (feature_channels < 1) throw ConfigError("mbrnn: feature_channels must be >= 1");
  backbone().validate();
}

template <class T>
Mbrnn<T>::Mbrnn(const MbrnnConfig& config, std::uint64_t seed)
    : config_((config.validate(), config)), net_(config.backbone(), seed) {}

template <class T>
MbrnnStep<T> Mbrnn<T>::step(nn::Graph<T>& g, std::span<const nn::Var<T>> frames, const nn::Var<T>& prev_blur,
                            const nn::Var<T>& prev_features) const {
  if (static_cast<int>(frames.size()) != config_.input_frames)
    throw ValidationError("mbrnn: expected " + std::to_string(config_.input_frames) + " input frames, got " +
                          std::to_string(frames.size()));
  const nn::Shape& ref = frames.front()->value.shape();
  for (const auto& f : frames)
    if (f->value.shape() != ref || ref.c != 3)
      throw ValidationError("mbrnn: input frames must be 3-channel and equally sized");
  if (prev_blur->value.shape() != ref)
    throw ValidationError("mbrnn: previous blur " + prev_blur->value.shape().str() + " does not match inputs " +
                          ref.str());
  const nn::Shape& fs = prev_features->value.shape();
  if (!fs.same_spatial(ref) || fs.c != config_.feature_channels)
    throw ValidationError("mbrnn: recurrent features " + fs.str() + " do not match inputs " + ref.str());

  std::vector<nn::Var<T>> parts(frames.begin(), frames.end());
  parts.push_back(prev_blur);
  parts.push_back(prev_features);
  const auto out = net_.forward(g, g.concat(std::span<const nn::Var<T>>(parts)));
  return {g.clamp01(g.add(prev_blur, out.image)), out.features};
}

template <class T>
MbrnnUnroll<T> Mbrnn<T>::unroll(nn::Graph<T>& g, std::span<const nn::Var<T>> frames) const {
  if (frames.empty()) throw ValidationError("mbrnn: no input frames");
  nn::Shape fs = frames.front()->value.shape();
  fs.c = config_.feature_channels;
  nn::Var<T> blur = frames[frames.size() / 2];
  nn::Var<T> features = g.constant(nn::Tensor<T>(fs));
  MbrnnUnroll<T> out;
  for (int k = 0; k < config_.iterations; ++k) {
    auto s = step(g, frames, blur, features);
    blur = s.blur;
    features = s.features;
    out.blurs.push_back(s.blur);
    out.features.push_back(s.features);
    out.networks.push_back(&net_);
  }
  out.crfm = g.concat(std::span<const nn::Var<T>>(out.features));
  return out;
}

void to_json(nlohmann::json& j, const MbrnnConfig& c) {
  j = nlohmann::json{{"levels", c.levels},
                     {"base_channels", c.base_channels},
                     {"feature_channels", c.feature_channels},
                     {"input_frames", c.input_frames},
                     {"iterations", c.iterations}};
}

void from_json(const nlohmann::json& j, MbrnnConfig& c) {
  c.levels = j.at("levels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.feature_channels = j.at("feature_channels").get<int>();
  c.input_frames = j.at("input_frames").get<int>();
  c.iterations = j.at("iterations").get<int>();
}

template class Mbrnn<float>;
template class Mbrnn<double>;

}  // namespace mb2d::models
