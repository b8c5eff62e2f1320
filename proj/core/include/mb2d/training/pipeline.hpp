#pragma once

#include <memory>
#include <vector>

#include "mb2d/blur.hpp"
#include "mb2d/metrics.hpp"
#include "mb2d/models/checkpoint.hpp"
#include "mb2d/models/mbrnn.hpp"
#include "mb2d/models/msdr.hpp"
#include "mb2d/models/onestage.hpp"
#include "mb2d/training/data.hpp"

namespace mb2d::training {

std::unique_ptr<models::Mbrnn<float>> make_mbrnn(const models::ModelState& state);
std::unique_ptr<models::Msdr<float>> make_msdr(const models::ModelState& state);
std::unique_ptr<models::OneStage<float>> make_onestage(const models::ModelState& state);

// Graph inputs assembled from a batch.
std::vector<nn::Var<float>> mbrnn_frames(nn::Graph<float>& g, const Batch& b, int input_frames);
models::MsdrInputs<float> msdr_inputs(nn::Graph<float>& g, const Batch& b, const models::MsdrConfig& config,
                                      const models::MbrnnUnroll<float>* more_blur);
/// Centre frame followed by the first `more_blur` ideal targets.
std::vector<nn::Var<float>> onestage_inputs(nn::Graph<float>& g, const Batch& b, int more_blur);

/// True when an MSDR configuration consumes MBRNN outputs.
inline bool needs_mbrnn(const models::MsdrConfig& c) { return c.more_blur_inputs > 0 || c.crfm_channels > 0; }

struct Prediction {
  std::vector<Image> more_blur;  // \hat B^{n+2k}
  std::vector<Image> by_scale;   // \hat I^{(s)}, index s - 1
  const Image& restored() const { return by_scale.front(); }
};

/// Full forward pass on one sample at its native resolution.
Prediction predict(const models::Mbrnn<float>* mbrnn, const models::Msdr<float>& msdr, const BlurSample& s);
std::vector<Image> predict_more_blur(const models::Mbrnn<float>& mbrnn, const BlurSample& s);
Image predict_onestage(const models::OneStage<float>& net, const BlurSample& s);

metrics::MetricsReport evaluate_deblur(const models::Mbrnn<float>* mbrnn, const models::Msdr<float>& msdr,
                                       const std::vector<BlurSample>& samples, std::size_t limit = 0);
/// One report per iteration k, comparing \hat B^{n+2k} with B^{n+2k}.
std::vector<metrics::MetricsReport> evaluate_more_blur(const models::Mbrnn<float>& mbrnn,
                                                       const std::vector<BlurSample>& samples,
                                                       std::size_t limit = 0);
metrics::MetricsReport evaluate_onestage(const models::OneStage<float>& net, const std::vector<BlurSample>& samples,
                                         std::size_t limit = 0);

}  // namespace mb2d::training
