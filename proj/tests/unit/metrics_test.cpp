#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <fstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "mb2d/errors.hpp"
#include "mb2d/metrics.hpp"

namespace mb2d::metrics {
namespace {

using testing::reference_ssim;

Image constant(int w, int h, float v) { return Image(w, h, 3, v); }

TEST(Psnr, UniformDifferenceOfTenthIsTwentyDb) {
  EXPECT_NEAR(psnr(constant(16, 16, 0.0f), constant(16, 16, 0.1f)), 20.0, 1e-6);
}

TEST(Psnr, IdenticalImagesHitCap) {
  const Image a = testing::random_image(8, 8, 1);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, Symmetric) {
  const Image a = testing::random_image(9, 7, 1);
  const Image b = testing::random_image(9, 7, 2);
  EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
}

TEST(Psnr, HalvingDifferenceAddsSixDb) {
  const Image a = testing::random_image(12, 12, 3);
  const Image b = testing::random_image(12, 12, 4);
  Image c = a;
  for (std::size_t i = 0; i < c.pixels.size(); ++i) c.pixels[i] = a.pixels[i] + 0.5f * (b.pixels[i] - a.pixels[i]);
  EXPECT_NEAR(psnr(a, c) - psnr(a, b), 20.0 * std::log10(2.0), 1e-4);
}

TEST(Psnr, DimensionMismatchThrows) {
  EXPECT_THROW(psnr(constant(4, 4, 0), constant(4, 5, 0)), ValidationError);
}

TEST(Ssim, IdentityIsOne) {
  const Image a = testing::random_image(20, 24, 5);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, Symmetric) {
  const Image a = testing::random_image(20, 20, 6);
  const Image b = testing::random_image(20, 20, 7);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
}

TEST(Ssim, MatchesSlidingWindowReference) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Image a = testing::random_image(23, 19, 10 + seed);
    Image b = a;
    const Image noise = testing::random_image(23, 19, 20 + seed);
    for (std::size_t i = 0; i < b.pixels.size(); ++i) b.pixels[i] = 0.7f * a.pixels[i] + 0.3f * noise.pixels[i];
    EXPECT_NEAR(ssim(a, b), reference_ssim(a, b), 1e-4);
  }
}

TEST(Ssim, ConstantImagesReduceToLuminanceTerm) {
  const double a = 0.2, b = 0.6, c1 = 1e-4;
  EXPECT_NEAR(ssim(constant(16, 16, 0.2f), constant(16, 16, 0.6f)), (2 * a * b + c1) / (a * a + b * b + c1), 1e-6);
}

TEST(Ssim, WindowLargerThanImageThrows) {
  EXPECT_THROW(ssim(constant(8, 8, 0), constant(8, 8, 0)), ValidationError);
}

TEST(DiffMap, NormalisedAbsoluteDifference) {
  Image a(4, 4, 3, 0.5f), b = a;
  b.at(1, 2, 0) = 0.8f;
  b.at(3, 3, 1) = 0.65f;
  const Image d = diff_map(a, b);
  EXPECT_EQ(d.channels, 1);
  EXPECT_FLOAT_EQ(d.at(1, 2, 0), 1.0f);
  EXPECT_NEAR(d.at(3, 3, 0), 0.5f, 1e-5);
  EXPECT_EQ(d.at(0, 0, 0), 0.0f);
}

Image horizontal_sinusoid(int w, int h, double period) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(0.5 + 0.4 * std::sin(2 * M_PI * x / period));
  return img;
}

TEST(Spectrum, SinusoidPeaksAtItsFrequency) {
  const auto curve = spectral_density(horizontal_sinusoid(64, 64, 8.0));
  ASSERT_EQ(curve.power.size(), 32u);
  const auto peak = std::max_element(curve.power.begin() + 1, curve.power.end()) - curve.power.begin();
  EXPECT_EQ(peak, 64 / 8);
  double off_peak = 0.0;
  for (std::size_t i = 1; i < curve.power.size(); ++i)
    if (static_cast<long>(i) != peak) off_peak += curve.power[i];
  EXPECT_LT(off_peak, 1e-9 * curve.power[static_cast<std::size_t>(peak)]);
}

TEST(Spectrum, ConstantImageIsAllDc) {
  const auto curve = spectral_density(constant(32, 48, 0.3f));
  EXPECT_GT(curve.power[0], 0.0);
  for (std::size_t i = 1; i < curve.power.size(); ++i) EXPECT_LT(curve.power[i], 1e-18 * curve.power[0]);
}

TEST(Spectrum, ConservesEnergy) {
  const Image img = testing::random_image(40, 36, 3);
  const auto l = luma(img);
  double energy = 0.0;
  for (double v : l) energy += v * v;
  energy *= static_cast<double>(l.size());  // Parseval for the unnormalised DFT
  EXPECT_NEAR(spectral_density(img).total() / energy, 1.0, 1e-6);
}

TEST(Spectrum, MatchesNaiveDft) {
  const int n = 32;
  const Image img = testing::random_image(n, n, 8);
  const auto l = luma(img);
  std::vector<double> bins(n / 2, 0.0);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u) {
      std::complex<double> s = 0.0;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          s += l[static_cast<std::size_t>(y) * n + x] * std::polar(1.0, -2 * M_PI * (double(u) * x + double(v) * y) / n);
      const double fu = (u <= n / 2 ? u : u - n), fv = (v <= n / 2 ? v : v - n);
      const int bin = std::min(n / 2 - 1, static_cast<int>(std::lround(std::hypot(fu, fv))));
      bins[static_cast<std::size_t>(bin)] += std::norm(s);
    }
  const auto curve = spectral_density(img);
  for (std::size_t i = 0; i < bins.size(); ++i) EXPECT_NEAR(curve.power[i] / bins[i], 1.0, 1e-6) << i;
}

TEST(Spectrum, BlurLowersHighBand) {
  Image sharp = testing::random_image(32, 32, 2);
  Image smooth = sharp;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c)
        smooth.at(x, y, c) = 0.5f * (sharp.at(x, y, c) + sharp.at((x + 1) % 32, y, c));
  EXPECT_LT(spectral_density(smooth).high_band(), spectral_density(sharp).high_band());
}

TEST(Spectrum, SmallImagesRejected) {
  EXPECT_THROW(spectral_density(constant(31, 64, 0)), ValidationError);
}

TEST(Report, MeansJsonAndFiles) {
  MetricsReport r;
  r.name = "x";
  r.samples = {{"a", 30.0, 0.9}, {"b", 32.0, 0.8}};
  r.params_millions = 0.5;
  EXPECT_DOUBLE_EQ(r.mean_psnr(), 31.0);
  EXPECT_DOUBLE_EQ(r.mean_ssim(), 0.85);
  const auto back = nlohmann::json(r).get<MetricsReport>();
  EXPECT_EQ(back.samples.size(), 2u);
  EXPECT_DOUBLE_EQ(back.mean_psnr(), 31.0);

  testing::TempDir dir("report");
  write_report(dir.path(), r);
  std::ifstream csv(dir.path() / "report.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_NE(header.find("psnr"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "report.json"));

  r.samples.push_back({"bad", 30.0, 1.5});
  EXPECT_THROW(r.validate(), ValidationError);
}

TEST(Fingerprint, StableAndSensitive) {
  EXPECT_EQ(fingerprint("abc"), fingerprint("abc"));
  EXPECT_NE(fingerprint("abc"), fingerprint("abd"));
}

}  // namespace
}  // namespace mb2d::metrics
