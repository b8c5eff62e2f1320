#include "mb2d/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mb2d/errors.hpp"

namespace mb2d::metrics {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_dims(b))
    throw ValidationError(std::string(what) + ": dimension mismatch " + std::to_string(a.width) + "x" +
                          std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                          std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                          std::to_string(b.channels));
}

// Valid-mode separable filter of a w x h plane with a 1D kernel.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same(a, b, "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.pixels.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b, const SsimParams& p) {
  require_same(a, b, "ssim");
  if (a.width < p.window || a.height < p.window)
    throw ValidationError("ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                          " smaller than the " + std::to_string(p.window) + "px window");
  std::vector<double> k(static_cast<std::size_t>(p.window));
  double ks = 0.0;
  for (int i = 0; i < p.window; ++i) {
    const double d = i - (p.window - 1) / 2.0;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
    ks += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= ks;

  const auto x = luma(a);
  const auto y = luma(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const int w = a.width;
  const int h = a.height;
  const auto mx = filter_valid(x, w, h, k);
  const auto my = filter_valid(y, w, h, k);
  const auto sxx = filter_valid(xx, w, h, k);
  const auto syy = filter_valid(yy, w, h, k);
  const auto sxy = filter_valid(xy, w, h, k);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

Image diff_map(const Image& a, const Image& b) {
  require_same(a, b, "diff_map");
  Image out(a.width, a.height, 1);
  double peak = 0.0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < a.channels; ++c) s += std::abs(static_cast<double>(a.at(x, y, c)) - b.at(x, y, c));
      s /= a.channels;
      out.at(x, y, 0) = static_cast<float>(s);
      peak = std::max(peak, s);
    }
  if (peak > 0.0)
    for (float& v : out.pixels) v = static_cast<float>(v / peak);
  return out;
}

double SpectralCurve::total() const {
  double s = 0.0;
  for (double p : power) s += p;
  return s;
}

double SpectralCurve::high_band() const {
  double s = 0.0;
  for (std::size_t i = power.size() / 2; i < power.size(); ++i) s += power[i];
  return s;
}

SpectralCurve spectral_density(const Image& img) {
  if (img.width < 32 || img.height < 32)
    throw ValidationError("spectral_density: image must be at least 32x32, got " + std::to_string(img.width) +
                          "x" + std::to_string(img.height));
  const int w = img.width;
  const int h = img.height;
  const auto lum = luma(img);
  std::vector<std::complex<double>> buf(lum.begin(), lum.end());
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan = fftw_plan_dft_2d(h, w, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const int bins = std::min(w, h) / 2;
  const double scale = std::min(w, h);
  SpectralCurve curve;
  curve.power.assign(static_cast<std::size_t>(bins), 0.0);
  for (int y = 0; y < h; ++y) {
    const double fy = (y <= h / 2 ? y : y - h) / static_cast<double>(h);
    for (int x = 0; x < w; ++x) {
      const double fx = (x <= w / 2 ? x : x - w) / static_cast<double>(w);
      const double r = std::hypot(fx, fy) * scale;
      const int bin = std::min(bins - 1, static_cast<int>(std::lround(r)));
      curve.power[static_cast<std::size_t>(bin)] += std::norm(buf[static_cast<std::size_t>(y) * w + x]);
    }
  }
  curve.log_power.reserve(curve.power.size());
  for (double p : curve.power) curve.log_power.push_back(std::log10(std::max(p, 1e-300)));
  return curve;
}

double time_median(const std::function<void()>& fn, int reps) {
  if (reps < 1) reps = 1;
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

double MetricsReport::mean_psnr() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : samples) s += m.psnr;
  return s / static_cast<double>(samples.size());
}

double MetricsReport::mean_ssim() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : samples) s += m.ssim;
  return s / static_cast<double>(samples.size());
}

void MetricsReport::validate() const {
  for (const auto& m : samples) {
    if (!std::isfinite(m.psnr) || m.psnr > kPsnrCap) throw ValidationError("report: PSNR out of range for " + m.id);
    if (!(m.ssim >= -1.0 && m.ssim <= 1.0)) throw ValidationError("report: SSIM out of range for " + m.id);
  }
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) samples.push_back({{"id", s.id}, {"psnr", s.psnr}, {"ssim", s.ssim}});
  j = nlohmann::json{{"name", r.name},
                     {"mean_psnr", r.mean_psnr()},
                     {"mean_ssim", r.mean_ssim()},
                     {"params_millions", r.params_millions},
                     {"seconds_per_frame", r.seconds_per_frame},
                     {"config_fingerprint", r.config_fingerprint},
                     {"extra", r.extra},
                     {"samples", samples}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  r.name = j.value("name", "");
  r.params_millions = j.value("params_millions", 0.0);
  r.seconds_per_frame = j.value("seconds_per_frame", 0.0);
  r.config_fingerprint = j.value("config_fingerprint", "");
  r.extra = j.value("extra", std::map<std::string, double>{});
  r.samples.clear();
  for (const auto& s : j.at("samples"))
    r.samples.push_back({s.at("id").get<std::string>(), s.at("psnr").get<double>(), s.at("ssim").get<double>()});
}

void write_report(const std::filesystem::path& dir, const MetricsReport& report) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << nlohmann::json(report).dump(2) << "\n";
  std::ofstream csv(dir / "report.csv");
  csv << "id,psnr,ssim\n" << std::setprecision(10);
  for (const auto& s : report.samples) csv << s.id << "," << s.psnr << "," << s.ssim << "\n";
  csv << "mean," << report.mean_psnr() << "," << report.mean_ssim() << "\n";
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectralCurve& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "radius_bin,log_power\n" << std::setprecision(12);
  for (std::size_t i = 0; i < curve.log_power.size(); ++i) out << i << "," << curve.log_power[i] << "\n";
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mb2d::metrics
