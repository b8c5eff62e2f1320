#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "mb2d/blur.hpp"
#include "mb2d/metrics.hpp"
#include "mb2d/models/mbrnn.hpp"
#include "mb2d/models/msdr.hpp"
#include "mb2d/nn/graph.hpp"
#include "mb2d/training/losses.hpp"

namespace {

using namespace mb2d;
using nn::Graph;
using nn::Shape;
using nn::Var;

void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  const auto x = testing::random_tensor<float>({c, 4, hw, hw}, 1);
  const auto w = nn::make_parameter(testing::random_tensor<float>({c, 1, 1, 9 * c}, 2, -0.1, 0.1));
  const auto b = nn::make_parameter(testing::random_tensor<float>({c, 1, 1, 1}, 3));
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(g.conv3x3(g.constant(x), w, b, 1));
  }
  state.SetItemsProcessed(state.iterations() * 4LL * hw * hw * 9 * c * c);
}
BENCHMARK(BM_Conv3x3)->Args({8, 32})->Args({16, 32})->Args({32, 16});

void BM_MbrnnTrainStep(benchmark::State& state) {
  const models::Mbrnn<float> net(models::MbrnnConfig{}, 1);
  const int hw = static_cast<int>(state.range(0));
  const Shape s{3, 4, hw, hw};
  std::vector<nn::Tensor<float>> frames, targets;
  for (int i = 0; i < 3; ++i) {
    frames.push_back(testing::random_tensor<float>(s, 10 + i));
    targets.push_back(testing::random_tensor<float>(s, 20 + i));
  }
  for (auto _ : state) {
    Graph<float> g(true);
    std::vector<Var<float>> f, t;
    for (int i = 0; i < 3; ++i) {
      f.push_back(g.constant(frames[i]));
      t.push_back(g.constant(targets[i]));
    }
    auto loss = training::mbrnn_loss<float>(g, net.unroll(g, f).blurs, t);
    g.backward(loss);
  }
}
BENCHMARK(BM_MbrnnTrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_MsdrForward(benchmark::State& state) {
  const models::MsdrConfig c;
  const models::Msdr<float> net(c, 1);
  const Shape s{3, 1, 64, 64};
  Graph<float> g0(false);
  models::MsdrInputs<float> in;
  in.center = g0.constant(testing::random_tensor<float>(s, 1));
  for (int k = 0; k < c.more_blur_inputs; ++k) in.more_blur.push_back(g0.constant(testing::random_tensor<float>(s, 2 + k)));
  in.crfm = g0.constant(testing::random_tensor<float>({c.crfm_channels, 1, 64, 64}, 9));
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(net.run(g, in));
  }
}
BENCHMARK(BM_MsdrForward)->Unit(benchmark::kMillisecond);

void BM_SynthesizeBlur(benchmark::State& state) {
  const auto seq = testing::random_sequence(64, 64, 32, 1);
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_blur(seq, 16, m, Crf{}));
}
BENCHMARK(BM_SynthesizeBlur)->Arg(7)->Arg(15);

void BM_Ssim(benchmark::State& state) {
  const Image a = testing::random_image(64, 64, 1), b = testing::random_image(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ssim(a, b));
}
BENCHMARK(BM_Ssim);

void BM_SpectralDensity(benchmark::State& state) {
  const Image a = testing::random_image(64, 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::spectral_density(a));
}
BENCHMARK(BM_SpectralDensity);

}  // namespace

BENCHMARK_MAIN();
