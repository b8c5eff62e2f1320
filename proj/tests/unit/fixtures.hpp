#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "mb2d/blur.hpp"
#include "mb2d/image.hpp"
#include "mb2d/nn/tensor.hpp"
#include "mb2d/scene.hpp"

namespace mb2d::testing {

inline Image random_image(int w, int h, std::uint64_t seed, int channels = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h, channels);
  for (float& v : img.pixels) v = u(rng);
  return img;
}

inline FrameSequence random_sequence(int w, int h, int frames, std::uint64_t seed) {
  FrameSequence seq;
  for (int f = 0; f < frames; ++f) seq.frames.push_back(random_image(w, h, seed * 7919 + static_cast<std::uint64_t>(f)));
  return seq;
}

template <class T>
nn::Tensor<T> random_tensor(nn::Shape s, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Tensor<T> t(s);
  for (auto& v : t.span()) v = static_cast<T>(u(rng));
  return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mb2d_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Tiny moving-scene dataset used across tests.
inline DatasetSpec micro_dataset_spec(std::uint64_t seed = 3) {
  DatasetSpec d;
  d.scene.width = 32;
  d.scene.height = 32;
  d.scene.num_frames = 16;
  d.scene.min_objects = 2;
  d.scene.max_objects = 3;
  d.scene.min_size = 8.0;
  d.scene.max_size = 14.0;
  d.scene.min_speed = 0.5;
  d.scene.max_speed = 1.0;
  d.blur.n = 3;
  d.train_sequences = 3;
  d.test_sequences = 1;
  d.seed = seed;
  return d;
}

}  // namespace mb2d::testing
