#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/image.hpp"
#include "mb2d/scene.hpp"

namespace mb2d {

/// Camera response applied to averaged linear light.
struct Crf {
  enum class Kind { identity, gamma };
  Kind kind = Kind::gamma;
  double gamma = 2.2;

  static Crf identity() { return {Kind::identity, 1.0}; }
  static Crf gamma_curve(double g) { return {Kind::gamma, g}; }

  double apply(double linear) const;
  double invert(double encoded) const;
  bool operator==(const Crf&) const = default;
};

struct BlurSpec {
  /// Base exposure in frames (odd, >= 3).
  int n = 5;
  /// Extra exposure of each more-blurred target (even, strictly increasing).
  std::vector<int> offsets{2, 4, 6};
  Crf crf;

  void validate() const;
  int max_exposure() const { return offsets.empty() ? n : n + offsets.back(); }
  /// Smallest sequence length that yields one sample.
  int min_sequence_length() const;
  /// Inclusive range of admissible sample indices t; empty when first > last.
  std::pair<int, int> sample_range(int num_frames) const;
  bool operator==(const BlurSpec&) const = default;
};

/// Inclusive frame window averaged by an exposure of m frames at `center`.
struct ExposureWindow {
  int first = 0;
  int last = 0;
};
ExposureWindow exposure_window(int center, int m);

/// One training / evaluation unit, every image anchored at reference frame n*t.
struct BlurSample {
  int t = 0;
  std::array<Image, 3> inputs;  // B^n_{t-1}, B^n_t, B^n_{t+1}
  Image sharp_gt;               // g(S[nt])
  std::vector<Image> more_blur_targets;  // B^{n+offset}_t per offset
  std::string sequence_id;

  const Image& center() const { return inputs[1]; }
};

/// g of the mean of the m frames centred at `center`; accumulation in double.
Image synthesize_blur(const FrameSequence& seq, int center, int m, const Crf& crf);

std::vector<BlurSample> make_samples(const FrameSequence& seq, const BlurSpec& spec,
                                     const std::string& sequence_id = {});

struct Dataset {
  BlurSpec blur;
  std::vector<BlurSample> train;
  std::vector<BlurSample> test;
};

struct DatasetSpec {
  RandomSceneParams scene;
  BlurSpec blur;
  int train_sequences = 24;
  int test_sequences = 8;
  std::uint64_t seed = 1;

  bool operator==(const DatasetSpec&) const = default;
};

struct NamedSequence {
  std::string id;  // train_0000, test_0000, ...
  bool train = true;
  FrameSequence frames;
};

/// The random sequences behind synthesize_dataset, in order.
std::vector<NamedSequence> render_dataset_sequences(const DatasetSpec& spec);

/// Renders random scenes and cuts them into samples. Deterministic in spec.
Dataset synthesize_dataset(const DatasetSpec& spec);

/// `<root>/<seq>/input/B{n}_{t}.png`, `gt/sharp_{t}.png`,
/// `targets/B{m}_{t}.png`, plus `<root>/manifest.json`.
void write_dataset(const std::filesystem::path& root, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& root);

void to_json(nlohmann::json& j, const Crf& c);
void from_json(const nlohmann::json& j, Crf& c);
void to_json(nlohmann::json& j, const BlurSpec& s);
void from_json(const nlohmann::json& j, BlurSpec& s);
void to_json(nlohmann::json& j, const DatasetSpec& s);
void from_json(const nlohmann::json& j, DatasetSpec& s);

}  // namespace mb2d
