#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/image.hpp"

namespace mb2d::metrics {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) over all channels, capped at 100 dB.
double psnr(const Image& a, const Image& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean local SSIM on luma over every full window position.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

/// Channel-averaged |a - b| scaled so its maximum is 1 (all zero if a == b).
Image diff_map(const Image& a, const Image& b);

/// Radially binned power spectrum of the luma channel. Every frequency lands
/// in one of min(H, W)/2 bins, so the bins sum to the total spectral energy.
struct SpectralCurve {
  std::vector<double> power;
  std::vector<double> log_power;

  double total() const;
  /// Energy in the upper half of the radii.
  double high_band() const;
};

SpectralCurve spectral_density(const Image& img);

/// Median wall-clock seconds of `fn` over `reps` calls.
double time_median(const std::function<void()>& fn, int reps);

struct SampleMetrics {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  std::string name;
  std::vector<SampleMetrics> samples;
  double params_millions = 0.0;
  double seconds_per_frame = 0.0;
  std::string config_fingerprint;
  std::map<std::string, double> extra;

  double mean_psnr() const;
  double mean_ssim() const;
  /// Invariants: PSNR finite and <= cap, SSIM in [-1, 1].
  void validate() const;
};

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

/// `report.json` and `report.csv` under `dir`.
void write_report(const std::filesystem::path& dir, const MetricsReport& report);
void write_spectrum_csv(const std::filesystem::path& path, const SpectralCurve& curve);

/// FNV-1a of a string, hex encoded.
std::string fingerprint(const std::string& text);

}  // namespace mb2d::metrics
