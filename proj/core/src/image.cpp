#include "mb2d/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "mb2d/errors.hpp"

namespace mb2d {

std::vector<double> luma(const Image& img) {
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  std::vector<double> out(count);
  if (img.channels == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = img.pixels[i];
    return out;
  }
  if (img.channels != 3) throw ValidationError("luma: expected 1 or 3 channels");
  for (std::size_t i = 0; i < count; ++i) {
    const float* p = img.pixels.data() + i * 3;
    out[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("resize: target extent must be positive");
  if (width == img.width && height == img.height) return img;
  Image out(width, height, img.channels);
  auto taps = [](int in, int n, int i, int& lo, int& hi, double& f) {
    double src = (i + 0.5) * static_cast<double>(in) / n - 0.5;
    if (src < 0) src = 0;
    lo = std::min(static_cast<int>(std::floor(src)), in - 1);
    hi = std::min(lo + 1, in - 1);
    f = src - lo;
  };
  for (int y = 0; y < height; ++y) {
    int y0, y1;
    double fy;
    taps(img.height, height, y, y0, y1, fy);
    for (int x = 0; x < width; ++x) {
      int x0, x1;
      double fx;
      taps(img.width, width, x, x0, x1, fx);
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(x0, y0, c) + fx * (img.at(x1, y0, c) - img.at(x0, y0, c));
        const double bot = img.at(x0, y1, c) + fx * (img.at(x1, y1, c) - img.at(x0, y1, c));
        out.at(x, y, c) = static_cast<float>(top + fy * (bot - top));
      }
    }
  }
  return out;
}

Image crop(const Image& img, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || x0 + width > img.width || y0 + height > img.height)
    throw RangeError("crop: window outside image");
  Image out(width, height, img.channels);
  for (int y = 0; y < height; ++y) {
    const float* src = img.pixels.data() + img.index(x0, y0 + y, 0);
    std::copy(src, src + static_cast<std::size_t>(width) * img.channels,
              out.pixels.data() + out.index(0, y, 0));
  }
  return out;
}

void write_png16(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ValidationError("write_png16: expected 1 or 3 channels");
  cv::Mat mat(img.height, img.width, img.channels == 3 ? CV_16UC3 : CV_16UC1);
  for (int y = 0; y < img.height; ++y) {
    auto* row = mat.ptr<std::uint16_t>(y);
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        // OpenCV stores BGR.
        const int src_c = img.channels == 3 ? 2 - c : c;
        const double v = std::clamp(static_cast<double>(img.at(x, y, src_c)), 0.0, 1.0);
        row[x * img.channels + c] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) throw DataError("failed to write " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED | cv::IMREAD_ANYDEPTH);
  if (mat.empty()) throw DataError("cannot read image " + path.string());
  double scale = 1.0;
  switch (mat.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F: scale = 1.0; break;
    default: throw DataError("unsupported pixel depth in " + path.string());
  }
  cv::Mat f;
  mat.convertTo(f, CV_32F, scale);
  const int ch = f.channels();
  if (ch != 1 && ch != 3 && ch != 4) throw DataError("unsupported channel count in " + path.string());
  Image img(f.cols, f.rows, 3);
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    for (int x = 0; x < f.cols; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = ch == 1 ? row[x] : row[x * ch + (2 - c)];
    }
  }
  return img;
}

}  // namespace mb2d
