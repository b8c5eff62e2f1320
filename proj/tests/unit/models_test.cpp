#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "mb2d/errors.hpp"
#include "mb2d/models/checkpoint.hpp"
#include "mb2d/models/mbrnn.hpp"
#include "mb2d/models/msdr.hpp"
#include "mb2d/models/onestage.hpp"

namespace mb2d::models {
namespace {

using nn::Graph;
using nn::Shape;
using nn::Tensor;
using nn::Var;
using testing::random_tensor;

std::int64_t conv_params(int in, int out) { return 9LL * in * out + out; }

// Layer arithmetic written out from the architecture description.
std::int64_t expected_unet_params(int levels, int base, int in, int out, int feat) {
  std::int64_t n = 0;
  int prev = in;
  for (int l = 0; l < levels; ++l) {
    const int c = base << l;
    n += conv_params(prev, c) + conv_params(c, c);
    prev = c;
  }
  for (int l = levels - 2; l >= 0; --l) {
    const int c = base << l;
    n += conv_params(prev + c, c) + conv_params(c, c);
    prev = c;
  }
  n += conv_params(prev, out);
  if (feat > 0) n += conv_params(prev, feat);
  return n;
}

TEST(UNet, ParameterCountByHand) {
  EXPECT_EQ(unet_parameter_count({2, 2, 3, 3, 0}), 523);
  EXPECT_EQ(UNet<float>({2, 2, 3, 3, 0}, 1).parameter_count(), 523);
}

TEST(UNet, ParameterCountMatchesLayerArithmetic) {
  for (int levels : {2, 3, 4})
    for (int base : {4, 8})
      for (int feat : {0, 8}) {
        const UNetSpec s{levels, base, 20, 3, feat};
        EXPECT_EQ(unet_parameter_count(s), expected_unet_params(levels, base, 20, 3, feat));
        EXPECT_EQ(UNet<float>(s, 0).parameter_count(), unet_parameter_count(s));
      }
}

TEST(UNet, SeededInitIsDeterministic) {
  const UNetSpec s{3, 4, 6, 3, 2};
  const UNet<float> a(s, 9), b(s, 9), c(s, 10);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(std::vector<float>(pa[i]->value.span().begin(), pa[i]->value.span().end()),
              std::vector<float>(pb[i]->value.span().begin(), pb[i]->value.span().end()));
    for (std::size_t j = 0; j < pa[i]->value.size(); ++j) any_diff |= pa[i]->value.span()[j] != pc[i]->value.span()[j];
  }
  EXPECT_TRUE(any_diff);
}

TEST(UNet, RejectsIndivisibleInput) {
  const UNet<float> net({3, 4, 3, 3, 0}, 1);
  Graph<float> g(false);
  EXPECT_THROW(net.forward(g, g.constant(Tensor<float>({3, 1, 10, 12}))), ValidationError);
  EXPECT_THROW(net.forward(g, g.constant(Tensor<float>({4, 1, 12, 12}))), ValidationError);
  EXPECT_NO_THROW(net.forward(g, g.constant(Tensor<float>({3, 1, 12, 12}))));
}

std::vector<Var<float>> frames3(Graph<float>& g, Shape s, std::uint64_t seed) {
  return {g.constant(random_tensor<float>(s, seed)), g.constant(random_tensor<float>(s, seed + 1)),
          g.constant(random_tensor<float>(s, seed + 2))};
}

TEST(Mbrnn, ZeroHeadsGiveIdentityResidual) {
  const Mbrnn<float> net(MbrnnConfig{}, 3);
  Graph<float> g(false);
  const auto frames = frames3(g, {3, 2, 16, 16}, 1);
  const auto out = net.unroll(g, frames);
  ASSERT_EQ(out.blurs.size(), 3u);
  for (const auto& b : out.blurs)
    for (std::size_t i = 0; i < b->value.size(); ++i) ASSERT_EQ(b->value.span()[i], frames[1]->value.span()[i]);
  for (const auto& f : out.features)
    for (float v : f->value.span()) ASSERT_EQ(v, 0.0f);
}

TEST(Mbrnn, SharesOneNetworkAcrossIterations) {
  const Mbrnn<float> net(MbrnnConfig{}, 3);
  Graph<float> g(false);
  const auto out = net.unroll(g, frames3(g, {3, 1, 8, 8}, 2));
  ASSERT_EQ(out.networks.size(), 3u);
  for (const auto* n : out.networks) EXPECT_EQ(n, &net.network());
}

TEST(Mbrnn, ShapesAndClamping) {
  MbrnnConfig c;
  c.feature_channels = 5;
  const Mbrnn<float> net(c, 4);
  testing::randomise_heads(net, 1, 3.0);
  Graph<float> g(false);
  const auto out = net.unroll(g, frames3(g, {3, 2, 12, 8}, 3));
  bool moved = false;
  for (const auto& b : out.blurs) {
    EXPECT_EQ(b->value.shape(), (Shape{3, 2, 12, 8}));
    for (float v : b->value.span()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
      moved |= v == 0.0f || v == 1.0f;
    }
  }
  EXPECT_TRUE(moved);
  for (const auto& f : out.features) EXPECT_EQ(f->value.shape(), (Shape{5, 2, 12, 8}));
  EXPECT_EQ(out.crfm->value.shape(), (Shape{15, 2, 12, 8}));
  EXPECT_EQ(c.crfm_channels(), 15);
}

TEST(Mbrnn, SingleFrameVariant) {
  MbrnnConfig c;
  c.input_frames = 1;
  const Mbrnn<float> net(c, 4);
  EXPECT_EQ(net.network().spec().in_channels, 3 + 3 + c.feature_channels);
  Graph<float> g(false);
  const auto center = g.constant(random_tensor<float>({3, 1, 8, 8}, 5));
  const std::vector<Var<float>> one{center};
  const auto out = net.unroll(g, one);
  EXPECT_EQ(out.blurs.back()->value.span()[7], center->value.span()[7]);
  EXPECT_THROW(net.unroll(g, frames3(g, {3, 1, 8, 8}, 1)), ValidationError);
}

TEST(Mbrnn, RejectsBadConfig) {
  MbrnnConfig c;
  c.input_frames = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(nlohmann::json(MbrnnConfig{}).get<MbrnnConfig>(), MbrnnConfig{});
}

MsdrInputs<float> msdr_inputs(Graph<float>& g, const MsdrConfig& c, Shape s, std::uint64_t seed) {
  MsdrInputs<float> in;
  in.center = g.constant(random_tensor<float>(s, seed));
  if (c.neighbor_frames) {
    in.prev = g.constant(random_tensor<float>(s, seed + 1));
    in.next = g.constant(random_tensor<float>(s, seed + 2));
  }
  for (int k = 0; k < c.more_blur_inputs; ++k) in.more_blur.push_back(g.constant(random_tensor<float>(s, seed + 3 + k)));
  if (c.crfm_channels > 0) in.crfm = g.constant(random_tensor<float>({c.crfm_channels, s.n, s.h, s.w}, seed + 9, -1, 1));
  return in;
}

TEST(Msdr, ZeroHeadsGiveIdentityResidual) {
  const MsdrConfig c;
  const Msdr<float> net(c, 5);
  Graph<float> g(false);
  const auto in = msdr_inputs(g, c, {3, 2, 16, 16}, 1);
  const auto out = net.run(g, in);
  ASSERT_EQ(out.by_scale.size(), 3u);
  // Coarsest scale: the downsampled input. Finer scales: the upsampled coarser estimate.
  const auto base3 = g.resize(in.center, 4, 4);
  for (std::size_t i = 0; i < base3->value.size(); ++i)
    ASSERT_FLOAT_EQ(out.by_scale[2]->value.span()[i], base3->value.span()[i]);
  for (int s = 2; s >= 1; --s) {
    const auto& coarse = out.by_scale[static_cast<std::size_t>(s)];
    const int h = 16 >> (s - 1);
    const auto up = g.resize(coarse, h, h);
    const auto& fine = out.by_scale[static_cast<std::size_t>(s - 1)];
    ASSERT_EQ(fine->value.shape(), up->value.shape());
    for (std::size_t i = 0; i < up->value.size(); ++i) ASSERT_FLOAT_EQ(fine->value.span()[i], up->value.span()[i]);
  }
}

TEST(Msdr, SharesOneNetworkAcrossScales) {
  const MsdrConfig c;
  const Msdr<float> net(c, 5);
  Graph<float> g(false);
  const auto out = net.run(g, msdr_inputs(g, c, {3, 1, 16, 16}, 2));
  ASSERT_EQ(out.networks.size(), 3u);
  for (const auto* n : out.networks) EXPECT_EQ(n, &net.network());
}

TEST(Msdr, ShapesAndClamping) {
  MsdrConfig c;
  c.neighbor_frames = true;
  const Msdr<float> net(c, 6);
  testing::randomise_heads(net, 2, 3.0);
  Graph<float> g(false);
  const auto out = net.run(g, msdr_inputs(g, c, {3, 2, 32, 16}, 3));
  for (int s = 1; s <= 3; ++s) {
    const auto& v = out.by_scale[static_cast<std::size_t>(s - 1)]->value;
    EXPECT_EQ(v.shape(), (Shape{3, 2, 32 >> (s - 1), 16 >> (s - 1)}));
    for (float x : v.span()) {
      ASSERT_GE(x, 0.0f);
      ASSERT_LE(x, 1.0f);
    }
  }
}

TEST(Msdr, InputChannelsFollowConfig) {
  MsdrConfig c;
  EXPECT_EQ(c.backbone().in_channels, 3 + 9 + 3 + 24);
  c.neighbor_frames = true;
  c.crfm_channels = 0;
  EXPECT_EQ(c.backbone().in_channels, 3 + 6 + 9 + 3);
  c.more_blur_inputs = 0;
  EXPECT_EQ(c.backbone().in_channels, 3 + 6 + 3);
}

TEST(Msdr, CrfmAddsOnlyFirstConvWeights) {
  MsdrConfig d;
  d.neighbor_frames = true;
  d.crfm_channels = 0;
  MsdrConfig e = d;
  e.crfm_channels = 24;
  const auto delta = unet_parameter_count(e.backbone()) - unet_parameter_count(d.backbone());
  EXPECT_EQ(delta, 9LL * 24 * d.base_channels);
}

TEST(Msdr, ValidatesInputs) {
  const MsdrConfig c;
  const Msdr<float> net(c, 5);
  Graph<float> g(false);
  auto in = msdr_inputs(g, c, {3, 1, 16, 16}, 1);
  in.more_blur.pop_back();
  EXPECT_THROW(net.run(g, in), ValidationError);
  EXPECT_THROW(net.run(g, msdr_inputs(g, c, {3, 1, 20, 20}, 1)), ValidationError);
  auto no_crfm = msdr_inputs(g, c, {3, 1, 16, 16}, 1);
  no_crfm.crfm = nullptr;
  EXPECT_THROW(net.run(g, no_crfm), ValidationError);
}

TEST(OneStage, ZeroHeadIsIdentityOnFirstInput) {
  const OneStage<float> net({3, 4, 3}, 1);
  Graph<float> g(false);
  const auto in = frames3(g, {3, 1, 8, 8}, 4);
  const auto out = net.forward(g, in);
  for (std::size_t i = 0; i < out->value.size(); ++i) ASSERT_EQ(out->value.span()[i], in[0]->value.span()[i]);
}

TEST(Checkpoint, RoundTripRestoresOutputs) {
  MbrnnConfig c;
  c.base_channels = 4;
  const Mbrnn<float> net(c, 11);
  testing::randomise_heads(net, 3, 3.0);
  const auto params = net.parameters();
  auto state = capture(Role::mbrnn, c, c.backbone(), params);
  state.seed = 11;
  state.step = 42;
  state.metric_history = nlohmann::json::array({{{"step", 42}, {"psnr", 30.5}}});

  testing::TempDir dir("ckpt");
  save_checkpoint(dir.path() / "m", state);
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "m"))
    EXPECT_EQ(e.path().extension() == ".tmp", false) << e.path();
  const auto back = load_checkpoint(dir.path() / "m");
  EXPECT_EQ(back.role, Role::mbrnn);
  EXPECT_EQ(back.spec, c.backbone());
  EXPECT_EQ(back.step, 42);
  EXPECT_EQ(back.seed, 11u);
  EXPECT_EQ(back.metric_history, state.metric_history);
  EXPECT_EQ(back.parameter_count(), unet_parameter_count(c.backbone()));
  EXPECT_DOUBLE_EQ(count_params(back), unet_parameter_count(c.backbone()) / 1e6);

  const Mbrnn<float> other(back.config.get<MbrnnConfig>(), 99);
  restore(back, other.parameters());
  Graph<float> g(false);
  const auto frames = frames3(g, {3, 1, 8, 8}, 7);
  const auto a = net.unroll(g, frames), b = other.unroll(g, frames);
  for (std::size_t i = 0; i < a.blurs[2]->value.size(); ++i)
    ASSERT_EQ(a.blurs[2]->value.span()[i], b.blurs[2]->value.span()[i]);
}

TEST(Checkpoint, ShapeMismatchAndCorruption) {
  const Mbrnn<float> small(MbrnnConfig{3, 4, 8, 3, 3}, 1);
  const Mbrnn<float> big(MbrnnConfig{3, 8, 8, 3, 3}, 1);
  const auto sp = small.parameters();
  const auto state = capture(Role::mbrnn, MbrnnConfig{3, 4, 8, 3, 3}, small.network().spec(), sp);
  EXPECT_THROW(restore(state, big.parameters()), ConfigError);

  testing::TempDir dir("corrupt");
  save_checkpoint(dir.path(), state);
  std::filesystem::resize_file(dir.path() / "model.bin", 100);
  EXPECT_THROW(load_checkpoint(dir.path()), DataError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing"), ConfigError);
  EXPECT_THROW(parse_role("unet"), ConfigError);
}

}  // namespace
}  // namespace mb2d::models
