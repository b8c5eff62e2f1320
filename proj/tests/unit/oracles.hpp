#pragma once

// Reference implementations kept deliberately naive and independent of the
// library code they check.

#include <cmath>
#include <random>
#include <type_traits>
#include <vector>

#include "mb2d/image.hpp"
#include "mb2d/scene.hpp"

namespace mb2d::testing {

// Plain per-pixel loop over the exposure window, then the CRF (gamma <= 0: identity).
inline Image naive_blur(const FrameSequence& seq, int center, int m, double gamma) {
  const Image& ref = seq.frames[static_cast<std::size_t>(center)];
  Image out(ref.width, ref.height, ref.channels);
  for (int y = 0; y < ref.height; ++y)
    for (int x = 0; x < ref.width; ++x)
      for (int c = 0; c < ref.channels; ++c) {
        double s = 0.0;
        for (int f = center - (m - 1) / 2; f <= center + (m - 1) / 2; ++f)
          s += seq.frames[static_cast<std::size_t>(f)].at(x, y, c);
        out.at(x, y, c) = static_cast<float>(gamma > 0 ? std::pow(s / m, 1.0 / gamma) : s / m);
      }
  return out;
}

inline std::vector<double> naive_luma(const Image& img) {
  std::vector<double> out(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out[static_cast<std::size_t>(y) * img.width + x] =
          img.channels == 1 ? img.at(x, y, 0)
                            : 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  return out;
}

// Explicit 11x11 Gaussian (sigma 1.5) statistics at every valid window.
inline double reference_ssim(const Image& a, const Image& b) {
  const int win = 11;
  const double sigma = 1.5;
  const auto x = naive_luma(a);
  const auto y = naive_luma(b);
  std::vector<double> w2(win * win);
  double norm = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double di = i - 5, dj = j - 5;
      w2[i * win + j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      norm += w2[i * win + j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  int count = 0;
  for (int oy = 0; oy + win <= a.height; ++oy)
    for (int ox = 0; ox + win <= a.width; ++ox) {
      double mx = 0, my = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double wt = w2[i * win + j] / norm;
          const std::size_t p = static_cast<std::size_t>(oy + i) * a.width + ox + j;
          mx += wt * x[p];
          my += wt * y[p];
        }
      double vx = 0, vy = 0, cov = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double wt = w2[i * win + j] / norm;
          const std::size_t p = static_cast<std::size_t>(oy + i) * a.width + ox + j;
          vx += wt * (x[p] - mx) * (x[p] - mx);
          vy += wt * (y[p] - my) * (y[p] - my);
          cov += wt * (x[p] - mx) * (y[p] - my);
        }
      total += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / count;
}

// Fresh heads start at zero, which hides most gradient paths and never
// exercises clamping. Draws every head weight from U(-scale, scale).
template <class Net>
void randomise_heads(const Net& net, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (const auto& c : net.network().convs())
    if (c.name.rfind("head", 0) == 0) {
      for (auto& v : c.weight->value.span()) v = static_cast<std::remove_reference_t<decltype(v)>>(u(rng));
      for (auto& v : c.bias->value.span()) v = static_cast<std::remove_reference_t<decltype(v)>>(0.1 * u(rng));
    }
}

}  // namespace mb2d::testing
