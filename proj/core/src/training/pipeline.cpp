#include "mb2d/training/pipeline.hpp"

#include "mb2d/errors.hpp"
#include "mb2d/models/tensor_io.hpp"

namespace mb2d::training {

std::unique_ptr<models::Mbrnn<float>> make_mbrnn(const models::ModelState& state) {
  if (state.role != models::Role::mbrnn) throw ConfigError("checkpoint role is " + models::role_name(state.role) + ", expected mbrnn");
  auto net = std::make_unique<models::Mbrnn<float>>(state.config.get<models::MbrnnConfig>(), state.seed);
  models::restore(state, net->parameters());
  return net;
}

std::unique_ptr<models::Msdr<float>> make_msdr(const models::ModelState& state) {
  if (state.role != models::Role::msdr) throw ConfigError("checkpoint role is " + models::role_name(state.role) + ", expected msdr");
  auto net = std::make_unique<models::Msdr<float>>(state.config.get<models::MsdrConfig>(), state.seed);
  models::restore(state, net->parameters());
  return net;
}

std::unique_ptr<models::OneStage<float>> make_onestage(const models::ModelState& state) {
  if (state.role != models::Role::onestage)
    throw ConfigError("checkpoint role is " + models::role_name(state.role) + ", expected onestage");
  auto net = std::make_unique<models::OneStage<float>>(state.config.get<models::OneStageConfig>(), state.seed);
  models::restore(state, net->parameters());
  return net;
}

std::vector<nn::Var<float>> mbrnn_frames(nn::Graph<float>& g, const Batch& b, int input_frames) {
  if (input_frames == 1) return {g.constant(b.center)};
  return {g.constant(b.prev), g.constant(b.center), g.constant(b.next)};
}

models::MsdrInputs<float> msdr_inputs(nn::Graph<float>& g, const Batch& b, const models::MsdrConfig& config,
                                      const models::MbrnnUnroll<float>* more_blur) {
  models::MsdrInputs<float> in;
  in.center = g.constant(b.center);
  if (config.neighbor_frames) {
    in.prev = g.constant(b.prev);
    in.next = g.constant(b.next);
  }
  if (needs_mbrnn(config) && !more_blur) throw ConfigError("msdr configuration requires MBRNN outputs");
  if (config.more_blur_inputs > 0) {
    if (static_cast<int>(more_blur->blurs.size()) < config.more_blur_inputs)
      throw ConfigError("msdr expects " + std::to_string(config.more_blur_inputs) + " more-blurred inputs, MBRNN yields " +
                        std::to_string(more_blur->blurs.size()));
    in.more_blur.assign(more_blur->blurs.begin(), more_blur->blurs.begin() + config.more_blur_inputs);
  }
  if (config.crfm_channels > 0) {
    if (more_blur->crfm->value.shape().c != config.crfm_channels)
      throw ConfigError("msdr expects " + std::to_string(config.crfm_channels) + " CRFM channels, MBRNN yields " +
                        std::to_string(more_blur->crfm->value.shape().c));
    in.crfm = more_blur->crfm;
  }
  return in;
}

std::vector<nn::Var<float>> onestage_inputs(nn::Graph<float>& g, const Batch& b, int more_blur) {
  if (more_blur > static_cast<int>(b.targets.size()))
    throw DataError("dataset has " + std::to_string(b.targets.size()) + " more-blurred targets, " +
                    std::to_string(more_blur) + " requested");
  std::vector<nn::Var<float>> in{g.constant(b.center)};
  for (int k = 0; k < more_blur; ++k) in.push_back(g.constant(b.targets[static_cast<std::size_t>(k)]));
  return in;
}

Prediction predict(const models::Mbrnn<float>* mbrnn, const models::Msdr<float>& msdr, const BlurSample& s) {
  const Batch b = make_batch(s);
  nn::Graph<float> g(false);
  Prediction p;
  std::unique_ptr<models::MbrnnUnroll<float>> mb;
  if (needs_mbrnn(msdr.config())) {
    if (!mbrnn) throw ConfigError("msdr configuration requires an MBRNN checkpoint");
    const auto frames = mbrnn_frames(g, b, mbrnn->config().input_frames);
    mb = std::make_unique<models::MbrnnUnroll<float>>(mbrnn->unroll(g, frames));
    for (const auto& v : mb->blurs) p.more_blur.push_back(models::to_image(v->value));
  }
  const auto out = msdr.run(g, msdr_inputs(g, b, msdr.config(), mb.get()));
  for (const auto& v : out.by_scale) p.by_scale.push_back(models::to_image(v->value));
  return p;
}

std::vector<Image> predict_more_blur(const models::Mbrnn<float>& mbrnn, const BlurSample& s) {
  const Batch b = make_batch(s);
  nn::Graph<float> g(false);
  const auto out = mbrnn.unroll(g, mbrnn_frames(g, b, mbrnn.config().input_frames));
  std::vector<Image> blurs;
  for (const auto& v : out.blurs) blurs.push_back(models::to_image(v->value));
  return blurs;
}

Image predict_onestage(const models::OneStage<float>& net, const BlurSample& s) {
  const Batch b = make_batch(s);
  nn::Graph<float> g(false);
  const auto in = onestage_inputs(g, b, net.config().inputs - 1);
  return models::to_image(net.forward(g, in)->value);
}

namespace {

std::size_t count_of(const std::vector<BlurSample>& samples, std::size_t limit) {
  return limit == 0 ? samples.size() : std::min(limit, samples.size());
}

}  // namespace

metrics::MetricsReport evaluate_deblur(const models::Mbrnn<float>* mbrnn, const models::Msdr<float>& msdr,
                                       const std::vector<BlurSample>& samples, std::size_t limit) {
  metrics::MetricsReport report;
  for (std::size_t i = 0; i < count_of(samples, limit); ++i) {
    const auto p = predict(mbrnn, msdr, samples[i]);
    report.samples.push_back({sample_id(samples[i]), metrics::psnr(p.restored(), samples[i].sharp_gt),
                              metrics::ssim(p.restored(), samples[i].sharp_gt)});
  }
  return report;
}

std::vector<metrics::MetricsReport> evaluate_more_blur(const models::Mbrnn<float>& mbrnn,
                                                       const std::vector<BlurSample>& samples, std::size_t limit) {
  std::vector<metrics::MetricsReport> reports(static_cast<std::size_t>(mbrnn.config().iterations));
  for (std::size_t i = 0; i < count_of(samples, limit); ++i) {
    const auto& s = samples[i];
    if (s.more_blur_targets.size() < reports.size())
      throw DataError("sample " + sample_id(s) + " lacks more-blurred targets");
    const auto blurs = predict_more_blur(mbrnn, s);
    for (std::size_t k = 0; k < reports.size(); ++k)
      reports[k].samples.push_back({sample_id(s), metrics::psnr(blurs[k], s.more_blur_targets[k]),
                                    metrics::ssim(blurs[k], s.more_blur_targets[k])});
  }
  return reports;
}

metrics::MetricsReport evaluate_onestage(const models::OneStage<float>& net, const std::vector<BlurSample>& samples,
                                         std::size_t limit) {
  metrics::MetricsReport report;
  for (std::size_t i = 0; i < count_of(samples, limit); ++i) {
    const Image out = predict_onestage(net, samples[i]);
    report.samples.push_back(
        {sample_id(samples[i]), metrics::psnr(out, samples[i].sharp_gt), metrics::ssim(out, samples[i].sharp_gt)});
  }
  return report;
}

}  // namespace mb2d::training
