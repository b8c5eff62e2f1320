#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace mb2d {

/// Interleaved H x W x C float image. Pixel values are nominally in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, int c = 3, float fill = 0.0f)
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  float at(int x, int y, int c) const { return pixels[index(x, y, c)]; }

  bool same_dims(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool empty() const { return pixels.empty(); }
  bool operator==(const Image&) const = default;
};

/// ITU-R BT.601 luma of an RGB image; single-channel images pass through.
std::vector<double> luma(const Image& img);

/// Bilinear resampling with half-pixel centres (matches the network resize op).
Image resize_bilinear(const Image& img, int width, int height);

/// Extent of pyramid scale s (1-based): ceil(extent / 2^(s-1)).
inline int scale_extent(int extent, int scale) {
  const int f = 1 << (scale - 1);
  return (extent + f - 1) / f;
}

Image crop(const Image& img, int x0, int y0, int width, int height);

/// Writes a lossless 16-bit PNG; values are clamped to [0,1].
void write_png16(const std::filesystem::path& path, const Image& img);
/// Reads an 8- or 16-bit PNG (or anything OpenCV decodes) into [0,1] RGB.
Image read_image(const std::filesystem::path& path);

}  // namespace mb2d
