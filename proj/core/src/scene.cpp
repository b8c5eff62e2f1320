#include "mb2d/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "mb2d/errors.hpp"

namespace mb2d {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy, int octave) {
  std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ull));
  h = splitmix(h ^ (static_cast<std::uint64_t>(iy) * 0x85157AF5ull) ^ (static_cast<std::uint64_t>(octave) << 56));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double u, double v, double spacing, int octave) {
  const double gu = u / spacing;
  const double gv = v / spacing;
  const double fu = std::floor(gu);
  const double fv = std::floor(gv);
  const auto iu = static_cast<std::int64_t>(fu);
  const auto iv = static_cast<std::int64_t>(fv);
  const double tu = smooth(gu - fu);
  const double tv = smooth(gv - fv);
  const double a = lattice(seed, iu, iv, octave);
  const double b = lattice(seed, iu + 1, iv, octave);
  const double c = lattice(seed, iu, iv + 1, octave);
  const double d = lattice(seed, iu + 1, iv + 1, octave);
  const double top = a + tu * (b - a);
  const double bot = c + tu * (d - c);
  return top + tv * (bot - top);
}

// Overlap length of [a0, a1] with [b0, b1].
double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

double coverage(const SceneObject& o, double cx, double cy, int px, int py) {
  const double half = 0.5 * o.size;
  if (o.shape == ObjectShape::rect) {
    return overlap(px, px + 1.0, cx - half, cx + half) * overlap(py, py + 1.0, cy - half, cy + half);
  }
  const double dx = px + 0.5 - cx;
  const double dy = py + 0.5 - cy;
  return std::clamp(half - std::sqrt(dx * dx + dy * dy) + 0.5, 0.0, 1.0);
}

const char* shape_name(ObjectShape s) { return s == ObjectShape::rect ? "rect" : "disk"; }

ObjectShape parse_shape(const std::string& s) {
  if (s == "rect") return ObjectShape::rect;
  if (s == "disk") return ObjectShape::disk;
  throw ConfigError("unknown object shape '" + s + "' (expected rect or disk)");
}

}  // namespace

double SceneObject::speed() const { return std::hypot(vx, vy); }

void SceneSpec::validate(int base_exposure, bool require_motion) const {
  if (width < 32 || height < 32)
    throw ValidationError("scene: width and height must be >= 32, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  if (num_frames < 1) throw ValidationError("scene: num_frames must be >= 1");
  if (base_exposure > 0 && num_frames < 3 * base_exposure + 6)
    throw ValidationError("scene: num_frames " + std::to_string(num_frames) + " < 3n+6 = " +
                          std::to_string(3 * base_exposure + 6));
  if (objects.empty()) throw ValidationError("scene: at least one object is required");
  for (const auto& o : objects)
    if (!(o.size > 0.0)) throw ValidationError("scene: object size must be positive");
  if (require_motion &&
      std::none_of(objects.begin(), objects.end(), [](const SceneObject& o) { return o.speed() >= 1.0; }))
    throw ValidationError("scene: no object moves at >= 1 px/frame");
}

ValueTexture::ValueTexture(std::uint64_t seed) : seed_(splitmix(seed)) {
  std::mt19937_64 rng(seed_);
  for (float& b : base_) b = static_cast<float>(0.2 + 0.6 * (static_cast<double>(rng() >> 11) * 0x1.0p-53));
  contrast_ = static_cast<float>(0.25 + 0.2 * (static_cast<double>(rng() >> 11) * 0x1.0p-53));
}

void ValueTexture::sample(double u, double v, float rgb[3]) const {
  static constexpr double kSpacing[] = {12.0, 6.0, 3.0, 1.5};
  static constexpr double kAmplitude[] = {0.35, 0.3, 0.2, 0.15};
  double lum = 0.0;
  for (int o = 0; o < 4; ++o) lum += kAmplitude[o] * value_noise(seed_, u, v, kSpacing[o], o);
  const double tint = value_noise(seed_ ^ 0xA5A5A5A5ull, u, v, 8.0, 7) - 0.5;
  for (int c = 0; c < 3; ++c) {
    const double t = c == 0 ? tint : (c == 2 ? -tint : 0.0);
    rgb[c] = static_cast<float>(std::clamp(base_[c] + 2.0 * contrast_ * (lum - 0.5) + 0.3 * t, 0.0, 1.0));
  }
}

FrameSequence render_sequence(const SceneSpec& spec) {
  spec.validate();
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const auto& o = spec.objects[i];
    const double half = 0.5 * o.size;
    bool visible = false;
    for (int f = 0; f < spec.num_frames && !visible; ++f) {
      const double cx = o.x0 + o.vx * f;
      const double cy = o.y0 + o.vy * f;
      visible = overlap(cx - half, cx + half, 0.0, spec.width) > 0.0 &&
                overlap(cy - half, cy + half, 0.0, spec.height) > 0.0;
    }
    if (!visible)
      throw ValidationError("scene: object " + std::to_string(i) + " never intersects the canvas");
  }

  const ValueTexture background(spec.background_seed ^ splitmix(spec.seed));
  std::vector<ValueTexture> textures;
  for (const auto& o : spec.objects) textures.emplace_back(o.texture_seed ^ splitmix(spec.seed + 1));

  Image bg(spec.width, spec.height, 3);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) background.sample(x + 0.5, y + 0.5, &bg.pixels[bg.index(x, y, 0)]);

  FrameSequence seq;
  seq.spec = spec;
  seq.source = "synthetic";
  seq.frames.reserve(static_cast<std::size_t>(spec.num_frames));
  for (int f = 0; f < spec.num_frames; ++f) {
    Image frame = bg;
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      const auto& o = spec.objects[i];
      const double cx = o.x0 + o.vx * f;
      const double cy = o.y0 + o.vy * f;
      const double half = 0.5 * o.size;
      const int xa = std::max(0, static_cast<int>(std::floor(cx - half)) - 1);
      const int xb = std::min(spec.width - 1, static_cast<int>(std::ceil(cx + half)) + 1);
      const int ya = std::max(0, static_cast<int>(std::floor(cy - half)) - 1);
      const int yb = std::min(spec.height - 1, static_cast<int>(std::ceil(cy + half)) + 1);
      for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) {
          const double a = coverage(o, cx, cy, x, y);
          if (a <= 0.0) continue;
          float rgb[3];
          textures[i].sample(x + 0.5 - cx, y + 0.5 - cy, rgb);
          for (int c = 0; c < 3; ++c) {
            float& p = frame.at(x, y, c);
            p = static_cast<float>((1.0 - a) * p + a * rgb[c]);
          }
        }
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

Image object_coverage(const SceneSpec& spec, std::size_t index, double frame) {
  if (index >= spec.objects.size()) throw RangeError("object_coverage: index out of range");
  const auto& o = spec.objects[index];
  const double cx = o.x0 + o.vx * frame;
  const double cy = o.y0 + o.vy * frame;
  Image mask(spec.width, spec.height, 1);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) mask.at(x, y, 0) = static_cast<float>(coverage(o, cx, cy, x, y));
  return mask;
}

SceneSpec random_scene(const RandomSceneParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix(seed));
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  SceneSpec spec;
  spec.width = p.width;
  spec.height = p.height;
  spec.num_frames = p.num_frames;
  spec.seed = seed;
  spec.background_seed = rng();
  const int count = p.min_objects + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                                   std::max(1, p.max_objects - p.min_objects + 1)));
  const double mid = 0.5 * (p.num_frames - 1);
  for (int i = 0; i < count; ++i) {
    SceneObject o;
    o.shape = (rng() & 1) ? ObjectShape::disk : ObjectShape::rect;
    o.texture_seed = rng();
    o.size = uniform(p.min_size, p.max_size);
    double speed = uniform(p.min_speed, p.max_speed);
    if (i == 0) speed = uniform(std::max(1.0, p.min_speed), std::max(1.0, p.max_speed));
    const double angle = uniform(0.0, 2.0 * M_PI);
    if (!p.static_scene) {
      o.vx = speed * std::cos(angle);
      o.vy = speed * std::sin(angle);
    }
    const double xm = uniform(0.25 * p.width, 0.75 * p.width);
    const double ym = uniform(0.25 * p.height, 0.75 * p.height);
    o.x0 = xm - o.vx * mid;
    o.y0 = ym - o.vy * mid;
    spec.objects.push_back(o);
  }
  return spec;
}

void to_json(nlohmann::json& j, const SceneObject& o) {
  j = nlohmann::json{{"shape", shape_name(o.shape)}, {"texture_seed", o.texture_seed},
                     {"velocity", {o.vx, o.vy}},      {"size", o.size},
                     {"position", {o.x0, o.y0}}};
}

void from_json(const nlohmann::json& j, SceneObject& o) {
  o.shape = parse_shape(j.at("shape").get<std::string>());
  o.texture_seed = j.at("texture_seed").get<std::uint64_t>();
  o.vx = j.at("velocity").at(0).get<double>();
  o.vy = j.at("velocity").at(1).get<double>();
  o.size = j.at("size").get<double>();
  o.x0 = j.at("position").at(0).get<double>();
  o.y0 = j.at("position").at(1).get<double>();
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
  j = nlohmann::json{{"width", s.width},
                     {"height", s.height},
                     {"num_frames", s.num_frames},
                     {"objects", s.objects},
                     {"background_seed", s.background_seed},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.num_frames = j.at("num_frames").get<int>();
  s.objects = j.at("objects").get<std::vector<SceneObject>>();
  s.background_seed = j.at("background_seed").get<std::uint64_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const RandomSceneParams& p) {
  j = nlohmann::json{{"width", p.width},         {"height", p.height},       {"num_frames", p.num_frames},
                     {"min_objects", p.min_objects}, {"max_objects", p.max_objects}, {"min_size", p.min_size},
                     {"max_size", p.max_size},   {"min_speed", p.min_speed}, {"max_speed", p.max_speed},
                     {"static_scene", p.static_scene}};
}

void from_json(const nlohmann::json& j, RandomSceneParams& p) {
  p.width = j.at("width").get<int>();
  p.height = j.at("height").get<int>();
  p.num_frames = j.at("num_frames").get<int>();
  p.min_objects = j.at("min_objects").get<int>();
  p.max_objects = j.at("max_objects").get<int>();
  p.min_size = j.at("min_size").get<double>();
  p.max_size = j.at("max_size").get<double>();
  p.min_speed = j.at("min_speed").get<double>();
  p.max_speed = j.at("max_speed").get<double>();
  p.static_scene = j.at("static_scene").get<bool>();
}

void write_sequence(const std::filesystem::path& dir, const FrameSequence& seq) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (int i = 0; i < seq.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%04d.png", i);
    write_png16(dir / name, seq.frames[static_cast<std::size_t>(i)]);
  }
  std::ofstream(dir / "scene.json") << nlohmann::json(seq.spec).dump(2) << "\n";
}

FrameSequence read_sequence(const std::filesystem::path& dir, double inverse_gamma) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (ext == ".png" || ext == ".tif" || ext == ".tiff") files.push_back(e.path());
  }
  if (files.empty()) throw DataError("no frames found in " + dir.string());
  std::sort(files.begin(), files.end());
  FrameSequence seq;
  seq.source = dir.string();
  for (const auto& f : files) {
    Image img = read_image(f);
    if (!seq.frames.empty() && !img.same_dims(seq.frames.front()))
      throw DataError("frame dimensions differ: " + f.string());
    if (inverse_gamma > 0.0)
      for (float& v : img.pixels) v = static_cast<float>(std::pow(std::clamp(v, 0.0f, 1.0f), inverse_gamma));
    seq.frames.push_back(std::move(img));
  }
  const auto manifest = dir / "scene.json";
  if (std::filesystem::exists(manifest)) {
    std::ifstream in(manifest);
    seq.spec = nlohmann::json::parse(in).get<SceneSpec>();
    seq.source = "synthetic";
  } else {
    seq.spec.width = seq.frames.front().width;
    seq.spec.height = seq.frames.front().height;
    seq.spec.num_frames = seq.size();
  }
  return seq;
}

}  // namespace mb2d
