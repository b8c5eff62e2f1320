#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "mb2d/errors.hpp"
#include "mb2d/models/mbrnn.hpp"
#include "mb2d/models/msdr.hpp"
#include "mb2d/training/adam.hpp"
#include "mb2d/training/data.hpp"
#include "mb2d/training/losses.hpp"
#include "mb2d/training/pipeline.hpp"
#include "mb2d/training/train.hpp"

namespace mb2d::training {
namespace {

using nn::Graph;
using nn::Shape;
using nn::Tensor;
using nn::Var;
using testing::random_tensor;

Var<double> pixel(Graph<double>& g, double v) { return g.constant(Tensor<double>({1, 1, 1, 1}, v)); }

double value(const Var<double>& v) { return v->value.span()[0]; }

TEST(Losses, MbrnnHandArithmetic) {
  Graph<double> g(false);
  const std::vector<Var<double>> out{pixel(g, 0.1), pixel(g, 0.2), pixel(g, 0.3)};
  const std::vector<Var<double>> zero{pixel(g, 0.0), pixel(g, 0.0), pixel(g, 0.0)};
  EXPECT_NEAR(value(mbrnn_loss<double>(g, out, zero)), 0.6, 1e-12);
  EXPECT_EQ(value(mbrnn_loss<double>(g, out, out)), 0.0);
}

TEST(Losses, MbrnnMatchesNaiveLoop) {
  Graph<double> g(false);
  std::vector<Var<double>> out, tgt;
  for (int k = 0; k < 3; ++k) {
    out.push_back(g.constant(random_tensor<double>({3, 2, 5, 7}, 10 + k)));
    tgt.push_back(g.constant(random_tensor<double>({3, 2, 5, 7}, 20 + k)));
  }
  double want = 0.0;
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    const auto a = out[k]->value.span(), b = tgt[k]->value.span();
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    want += s / static_cast<double>(a.size());
  }
  EXPECT_NEAR(value(mbrnn_loss<double>(g, out, tgt)), want, 1e-7);
}

TEST(Losses, MbrnnRejectsMismatch) {
  Graph<double> g(false);
  const std::vector<Var<double>> two{pixel(g, 0), pixel(g, 0)};
  const std::vector<Var<double>> three{pixel(g, 0), pixel(g, 0), pixel(g, 0)};
  EXPECT_THROW(mbrnn_loss<double>(g, two, three), ValidationError);
  const std::vector<Var<double>> bigger{pixel(g, 0), pixel(g, 0), g.constant(Tensor<double>({1, 1, 2, 1}))};
  EXPECT_ANY_THROW(mbrnn_loss<double>(g, three, bigger));
}

std::vector<Var<double>> downsampled(Graph<double>& g, const Var<double>& gt, int scales) {
  std::vector<Var<double>> v;
  const Shape s = gt->value.shape();
  for (int k = 1; k <= scales; ++k) v.push_back(g.resize(gt, scale_extent(s.h, k), scale_extent(s.w, k)));
  return v;
}

TEST(Losses, MsdrPerfectAndOffsetCases) {
  Graph<double> g(false);
  const auto gt = g.constant(random_tensor<double>({3, 1, 16, 16}, 3, 0.2, 0.8));
  auto outs = downsampled(g, gt, 3);
  EXPECT_NEAR(value(msdr_loss<double>(g, outs, gt)), 0.0, 1e-15);
  Tensor<double> shifted = outs[1]->value;
  for (auto& v : shifted.span()) v += 0.1;
  outs[1] = g.constant(shifted);
  EXPECT_NEAR(value(msdr_loss<double>(g, outs, gt)), 0.1, 1e-12);
}

TEST(Losses, MsdrMatchesNaiveLoop) {
  Graph<double> g(false);
  const auto gt = g.constant(random_tensor<double>({3, 2, 16, 8}, 4));
  const auto ref = downsampled(g, gt, 3);
  std::vector<Var<double>> outs;
  double want = 0.0;
  for (int s = 0; s < 3; ++s) {
    outs.push_back(g.constant(random_tensor<double>(ref[s]->value.shape(), 30 + s)));
    double acc = 0.0;
    for (std::size_t i = 0; i < ref[s]->value.size(); ++i)
      acc += std::abs(outs[s]->value.span()[i] - ref[s]->value.span()[i]);
    want += acc / static_cast<double>(ref[s]->value.size());
  }
  EXPECT_NEAR(value(msdr_loss<double>(g, outs, gt)), want, 1e-7);
  outs[2] = g.constant(Tensor<double>({3, 2, 3, 3}));
  EXPECT_THROW(msdr_loss<double>(g, outs, gt), ValidationError);
}

TEST(GradCheck, MbrnnLoss) {
  const models::Mbrnn<double> net({2, 2, 2, 3, 3}, 5);
  testing::randomise_heads(net, 1, 0.2);
  const Shape s{3, 1, 4, 4};
  std::vector<Tensor<double>> frames, targets;
  for (int i = 0; i < 3; ++i) {
    frames.push_back(random_tensor<double>(s, 40 + i, 0.2, 0.8));
    targets.push_back(random_tensor<double>(s, 50 + i, 0.2, 0.8));
  }
  const auto r = testing::grad_check(
      [&](Graph<double>& g) {
        std::vector<Var<double>> f, t;
        for (int i = 0; i < 3; ++i) {
          f.push_back(g.constant(frames[i]));
          t.push_back(g.constant(targets[i]));
        }
        return mbrnn_loss<double>(g, net.unroll(g, f).blurs, t);
      },
      net.parameters(), 300, 3);
  EXPECT_GE(r.pass_fraction(), 0.99) << "worst " << r.worst;
}

TEST(GradCheck, MsdrLoss) {
  models::MsdrConfig c{2, 2, 2, true, 2, 3};
  const models::Msdr<double> net(c, 6);
  testing::randomise_heads(net, 2, 0.2);
  const Shape s{3, 1, 8, 8};
  std::vector<Tensor<double>> images;
  for (int i = 0; i < 6; ++i) images.push_back(random_tensor<double>(s, 60 + i, 0.2, 0.8));
  const auto crfm = random_tensor<double>({3, 1, 8, 8}, 70, -1, 1);
  const auto r = testing::grad_check(
      [&](Graph<double>& g) {
        models::MsdrInputs<double> in;
        in.center = g.constant(images[0]);
        in.prev = g.constant(images[1]);
        in.next = g.constant(images[2]);
        in.more_blur = {g.constant(images[3]), g.constant(images[4])};
        in.crfm = g.constant(crfm);
        return msdr_loss<double>(g, net.run(g, in).by_scale, g.constant(images[5]));
      },
      net.parameters(), 300, 4);
  EXPECT_GE(r.pass_fraction(), 0.99) << "worst " << r.worst;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = nn::make_parameter(Tensor<float>({1, 1, 1, 2}, 1.0f));
  Adam opt({p}, {});
  p->ensure_grad().span()[0] = 0.5f;
  p->grad.span()[1] = -2.0f;
  opt.step();
  // Bias-corrected m/sqrt(v) is sign(g) on the first step.
  EXPECT_NEAR(p->value.span()[0], 1.0f - 2e-4f, 1e-7);
  EXPECT_NEAR(p->value.span()[1], 1.0f + 2e-4f, 1e-7);
  opt.zero_grad();
  EXPECT_EQ(p->grad.span()[0], 0.0f);
  opt.step();
  EXPECT_EQ(opt.steps(), 2);
}

Image numbered(int w, int h) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y, 0) = static_cast<float>(y * w + x);
  return img;
}

TEST(Augment, CornerTracking) {
  const Image img = numbered(4, 3);
  const float tl = img.at(0, 0, 0), tr = img.at(3, 0, 0), bl = img.at(0, 2, 0);
  const Image h = apply(img, {true, false, 0});
  EXPECT_EQ(h.at(3, 0, 0), tl);
  const Image v = apply(img, {false, true, 0});
  EXPECT_EQ(v.at(0, 2, 0), tl);
  const Image r = apply(img, {false, false, 1});
  ASSERT_EQ(r.width, 3);
  ASSERT_EQ(r.height, 4);
  EXPECT_EQ(r.at(0, 0, 0), tr);  // counter-clockwise: top-right to top-left
  EXPECT_EQ(r.at(0, 3, 0), tl);
  EXPECT_EQ(r.at(2, 3, 0), bl);
  EXPECT_EQ(apply(img, {false, false, 4}), img);
  EXPECT_EQ(apply(apply(img, {true, true, 0}), {false, false, 2}), img);
}

TEST(Augment, AppliedCoherentlyToWholeSample) {
  BlurSample s;
  const Image base = numbered(8, 8);
  auto marked = [&](float offset) {
    Image m = base;
    for (float& v : m.pixels) v += offset;
    return m;
  };
  for (int k = 0; k < 3; ++k) s.inputs[static_cast<std::size_t>(k)] = marked(100.0f * k);
  s.sharp_gt = marked(1000.0f);
  s.more_blur_targets = {marked(2000.0f), marked(3000.0f)};
  const Augment aug{true, false, 1};
  const auto t = transform_sample(s, 2, 1, 4, aug);
  const Image ref = apply(crop(base, 2, 1, 4, 4), aug);
  auto check = [&](const Image& img, float offset) {
    for (std::size_t i = 0; i < ref.pixels.size(); ++i) ASSERT_EQ(img.pixels[i], ref.pixels[i] + offset);
  };
  for (int k = 0; k < 3; ++k) check(t.inputs[static_cast<std::size_t>(k)], 100.0f * k);
  check(t.sharp_gt, 1000.0f);
  check(t.more_blur_targets[0], 2000.0f);
  check(t.more_blur_targets[1], 3000.0f);
}

TEST(Sampler, SeededAndReproducible) {
  const Dataset data = synthesize_dataset(testing::micro_dataset_spec());
  SamplerOptions o;
  o.crop_size = 16;
  o.seed = 5;
  BatchSampler a(data.train, o), b(data.train, o);
  o.seed = 6;
  BatchSampler c(data.train, o);
  bool differs = false;
  for (int i = 0; i < 5; ++i) {
    const auto x = a.next(), y = b.next(), z = c.next();
    EXPECT_EQ(x.ids, y.ids);
    EXPECT_EQ(std::vector<float>(x.center.span().begin(), x.center.span().end()),
              std::vector<float>(y.center.span().begin(), y.center.span().end()));
    EXPECT_EQ(x.center.shape(), (Shape{3, 4, 16, 16}));
    differs |= std::vector<float>(x.center.span().begin(), x.center.span().end()) !=
               std::vector<float>(z.center.span().begin(), z.center.span().end());
  }
  EXPECT_TRUE(differs);
  o.crop_size = 64;
  EXPECT_THROW(BatchSampler(data.train, o).next(), ConfigError);
}

TrainConfig micro_config(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  c.batch_size = 2;
  c.iterations = 10;
  c.crop_size = 16;
  c.seed = 3;
  c.val_samples = 2;
  c.mbrnn = {2, 4, 4, 3, 3};
  c.msdr = {2, 4, 3, false, 3, 12};
  c.onestage = {2, 4, 2};
  return c;
}

TEST(Train, MicroRunIsDeterministic) {
  const Dataset data = synthesize_dataset(testing::micro_dataset_spec());
  const auto a = train_stage(micro_config(Stage::mbrnn), data);
  const auto b = train_stage(micro_config(Stage::mbrnn), data);
  ASSERT_EQ(a.losses.size(), 10u);
  EXPECT_EQ(a.losses, b.losses);
  for (double l : a.losses) EXPECT_TRUE(std::isfinite(l));
  ASSERT_EQ(a.validation.size(), 1u);
  EXPECT_EQ(a.validation.back().step, 10);
  EXPECT_EQ(a.model.weights.size(), b.model.weights.size());
  for (std::size_t i = 0; i < a.model.weights.size(); ++i)
    EXPECT_EQ(std::vector<float>(a.model.weights[i].span().begin(), a.model.weights[i].span().end()),
              std::vector<float>(b.model.weights[i].span().begin(), b.model.weights[i].span().end()));
}

TEST(Train, FrozenMbrnnStaysBitIdentical) {
  const Dataset data = synthesize_dataset(testing::micro_dataset_spec());
  const auto mb = train_stage(micro_config(Stage::mbrnn), data);
  const auto run = train_stage(micro_config(Stage::msdr), data, {}, &mb.model);
  ASSERT_TRUE(run.mbrnn.has_value());
  for (std::size_t i = 0; i < mb.model.weights.size(); ++i)
    ASSERT_EQ(std::vector<float>(mb.model.weights[i].span().begin(), mb.model.weights[i].span().end()),
              std::vector<float>(run.mbrnn->weights[i].span().begin(), run.mbrnn->weights[i].span().end()));

  auto joint = micro_config(Stage::msdr);
  joint.freeze_mbrnn = false;
  const auto j = train_stage(joint, data, {}, &mb.model);
  bool changed = false;
  for (std::size_t i = 0; i < mb.model.weights.size(); ++i)
    changed |= std::vector<float>(mb.model.weights[i].span().begin(), mb.model.weights[i].span().end()) !=
               std::vector<float>(j.mbrnn->weights[i].span().begin(), j.mbrnn->weights[i].span().end());
  EXPECT_TRUE(changed);
}

TEST(Train, MsdrRequiresMbrnn) {
  const Dataset data = synthesize_dataset(testing::micro_dataset_spec());
  EXPECT_THROW(train_stage(micro_config(Stage::msdr), data), ConfigError);
  auto plain = micro_config(Stage::msdr);
  plain.msdr.more_blur_inputs = 0;
  plain.msdr.crfm_channels = 0;
  EXPECT_NO_THROW(train_stage(plain, data));
}

TEST(Train, NonFiniteLossAbortsWithDiagnostics) {
  Dataset data = synthesize_dataset(testing::micro_dataset_spec());
  for (auto& s : data.train) std::fill(s.inputs[1].pixels.begin(), s.inputs[1].pixels.end(), std::nanf(""));
  try {
    train_stage(micro_config(Stage::onestage), data);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/t"), std::string::npos) << msg;
  }
}

TEST(Train, WritesLogsAndCheckpoints) {
  const Dataset data = synthesize_dataset(testing::micro_dataset_spec());
  auto c = micro_config(Stage::onestage);
  c.checkpoint_every = 4;
  c.validate_every = 5;
  testing::TempDir dir("train");
  const auto run = train_stage(c, data, dir.path());
  EXPECT_EQ(run.validation.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "checkpoints" / "step_4" / "model.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "checkpoints" / "step_8" / "model.bin"));
  const auto final_state = models::load_checkpoint(dir.path() / "model");
  EXPECT_EQ(final_state.step, 10);
  EXPECT_EQ(final_state.metric_history.size(), 2u);
  std::ifstream csv(dir.path() / "metrics.csv");
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  EXPECT_EQ(line, "step,loss,val_psnr,val_ssim");
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 10);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "timing.csv"));
}

TEST(Train, ConfigValidation) {
  auto c = micro_config(Stage::msdr);
  c.crop_size = 12;  // not a multiple of 8 (2 levels x 3 scales)
  EXPECT_THROW(c.validate(), ConfigError);
  c.crop_size = 16;
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(c.validate(10.0), ConfigError);  // below twice the blur extent
  EXPECT_EQ(nlohmann::json(c).get<TrainConfig>().crop_size, 16);
  EXPECT_THROW(parse_stage("deblur"), ConfigError);
}

TEST(Train, OverfitsOneSample) {
  Dataset data = synthesize_dataset(testing::micro_dataset_spec(11));
  data.train.resize(1);
  auto c = micro_config(Stage::mbrnn);
  c.batch_size = 1;
  c.crop_size = 32;  // whole frame, so every step sees the same batch
  c.flip_h = c.flip_v = c.rot90 = false;
  c.iterations = 1000;
  c.adam.lr = 1e-3;
  const auto run = train_stage(c, data);
  EXPECT_LT(run.losses.back(), 0.7 * run.losses.front());
}

}  // namespace
}  // namespace mb2d::training
