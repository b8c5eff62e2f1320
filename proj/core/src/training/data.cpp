#include "mb2d/training/data.hpp"

#include "mb2d/errors.hpp"
#include "mb2d/models/tensor_io.hpp"

namespace mb2d::training {

Image apply(const Image& img, const Augment& aug) {
  Image out = img;
  if (aug.flip_h) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  }
  if (aug.flip_v) {
    Image src = out;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = src.at(x, img.height - 1 - y, c);
  }
  for (int r = 0; r < ((aug.rot90 % 4) + 4) % 4; ++r) {
    Image src = out;
    Image rot(src.height, src.width, src.channels);
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x)
        for (int c = 0; c < src.channels; ++c) rot.at(y, src.width - 1 - x, c) = src.at(x, y, c);
    out = std::move(rot);
  }
  return out;
}

BlurSample transform_sample(const BlurSample& s, int x0, int y0, int size, const Augment& aug) {
  auto t = [&](const Image& img) { return apply(crop(img, x0, y0, size, size), aug); };
  BlurSample out;
  out.t = s.t;
  out.sequence_id = s.sequence_id;
  for (std::size_t k = 0; k < 3; ++k) out.inputs[k] = t(s.inputs[k]);
  out.sharp_gt = t(s.sharp_gt);
  for (const auto& m : s.more_blur_targets) out.more_blur_targets.push_back(t(m));
  return out;
}

std::string sample_id(const BlurSample& s) { return s.sequence_id + "/t" + std::to_string(s.t); }

Batch make_batch(std::span<const BlurSample* const> samples) {
  if (samples.empty()) throw ValidationError("make_batch: empty batch");
  auto gather = [&](auto&& pick) {
    std::vector<const Image*> imgs;
    for (const BlurSample* s : samples) imgs.push_back(&pick(*s));
    return models::to_tensor<float>(std::span<const Image* const>(imgs));
  };
  Batch b;
  b.prev = gather([](const BlurSample& s) -> const Image& { return s.inputs[0]; });
  b.center = gather([](const BlurSample& s) -> const Image& { return s.inputs[1]; });
  b.next = gather([](const BlurSample& s) -> const Image& { return s.inputs[2]; });
  b.sharp = gather([](const BlurSample& s) -> const Image& { return s.sharp_gt; });
  const std::size_t targets = samples.front()->more_blur_targets.size();
  for (std::size_t k = 0; k < targets; ++k) {
    b.targets.push_back(gather([k](const BlurSample& s) -> const Image& {
      if (s.more_blur_targets.size() <= k) throw ValidationError("make_batch: samples differ in target count");
      return s.more_blur_targets[k];
    }));
  }
  for (const BlurSample* s : samples) b.ids.push_back(sample_id(*s));
  return b;
}

Batch make_batch(const BlurSample& sample) {
  const BlurSample* p = &sample;
  return make_batch(std::span<const BlurSample* const>(&p, 1));
}

BatchSampler::BatchSampler(const std::vector<BlurSample>& samples, const SamplerOptions& options)
    : samples_(samples), options_(options), rng_(options.seed ^ 0x5DEECE66Dull) {
  if (samples_.empty()) throw DataError("training set is empty");
  const Image& ref = samples_.front().center();
  if (options_.crop_size > ref.width || options_.crop_size > ref.height)
    throw ConfigError("crop_size " + std::to_string(options_.crop_size) + " exceeds image size " +
                      std::to_string(ref.width) + "x" + std::to_string(ref.height));
}

Batch BatchSampler::next() {
  std::vector<BlurSample> crops;
  crops.reserve(static_cast<std::size_t>(options_.batch_size));
  for (int i = 0; i < options_.batch_size; ++i) {
    const BlurSample& s = samples_[draw(samples_.size())];
    const int size = options_.crop_size;
    const int x0 = static_cast<int>(draw(static_cast<std::uint64_t>(s.center().width - size + 1)));
    const int y0 = static_cast<int>(draw(static_cast<std::uint64_t>(s.center().height - size + 1)));
    Augment aug;
    const std::uint64_t bits = draw(16);
    aug.flip_h = options_.flip_h && (bits & 1);
    aug.flip_v = options_.flip_v && (bits & 2);
    aug.rot90 = options_.rot90 && (bits & 4) ? 1 : 0;
    crops.push_back(transform_sample(s, x0, y0, size, aug));
  }
  std::vector<const BlurSample*> ptrs;
  for (const auto& c : crops) ptrs.push_back(&c);
  return make_batch(std::span<const BlurSample* const>(ptrs));
}

}  // namespace mb2d::training
