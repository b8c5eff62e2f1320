#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/image.hpp"

namespace mb2d {

enum class ObjectShape { rect, disk };

/// One moving object. Position is the centroid at frame 0; the trajectory is
/// linear and unbounded, rendering clips it to the canvas.
struct SceneObject {
  ObjectShape shape = ObjectShape::rect;
  std::uint64_t texture_seed = 0;
  double vx = 0.0;  // px / frame
  double vy = 0.0;
  double size = 16.0;  // square side or disk diameter, px
  double x0 = 0.0;
  double y0 = 0.0;

  double speed() const;
  bool operator==(const SceneObject&) const = default;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  int num_frames = 24;
  std::vector<SceneObject> objects;
  std::uint64_t background_seed = 0;
  std::uint64_t seed = 0;

  /// Structural checks. `base_exposure` > 0 also enforces the frame budget
  /// num_frames >= 3n + 6; `require_motion` enforces an object moving at
  /// >= 1 px/frame.
  void validate(int base_exposure = 0, bool require_motion = false) const;
  bool operator==(const SceneSpec&) const = default;
};

/// Ordered sharp frames in linear light.
struct FrameSequence {
  std::vector<Image> frames;
  SceneSpec spec;
  std::string source;

  int size() const { return static_cast<int>(frames.size()); }
};

/// Renders every frame; pure and deterministic in the spec.
FrameSequence render_sequence(const SceneSpec& spec);

/// Fractional coverage of object `index` at `frame` (1 channel, [0,1]),
/// ignoring occlusion by later objects.
Image object_coverage(const SceneSpec& spec, std::size_t index, double frame);

/// Band-limited colour value noise, a continuous function of position.
class ValueTexture {
 public:
  explicit ValueTexture(std::uint64_t seed);
  void sample(double u, double v, float rgb[3]) const;

 private:
  std::uint64_t seed_;
  float base_[3];
  float contrast_;
};

struct RandomSceneParams {
  int width = 64;
  int height = 64;
  int num_frames = 24;
  int min_objects = 3;
  int max_objects = 5;
  double min_size = 12.0;
  double max_size = 28.0;
  double min_speed = 0.5;
  double max_speed = 1.5;
  /// All velocities zero (degenerate no-blur scenes).
  bool static_scene = false;

  bool operator==(const RandomSceneParams&) const = default;
};

/// Draws a scene whose objects pass near the canvas centre mid-sequence.
/// Unless static, at least one object moves at >= 1 px/frame.
SceneSpec random_scene(const RandomSceneParams& params, std::uint64_t seed);

void to_json(nlohmann::json& j, const SceneObject& o);
void from_json(const nlohmann::json& j, SceneObject& o);
void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);
void to_json(nlohmann::json& j, const RandomSceneParams& p);
void from_json(const nlohmann::json& j, RandomSceneParams& p);

/// `dir/frame_0000.png ...` plus `dir/scene.json`.
void write_sequence(const std::filesystem::path& dir, const FrameSequence& seq);
/// Reads a directory of frames (sorted by name); scene.json is optional.
/// With `inverse_gamma` > 0 pixel values are linearised as v^gamma.
FrameSequence read_sequence(const std::filesystem::path& dir, double inverse_gamma = 0.0);

}  // namespace mb2d
