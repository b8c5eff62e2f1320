#include "mb2d/blur.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "mb2d/errors.hpp"

namespace mb2d {

namespace fs = std::filesystem;

double Crf::apply(double linear) const {
  if (kind == Kind::identity) return linear;
  return std::pow(std::max(linear, 0.0), 1.0 / gamma);
}

double Crf::invert(double encoded) const {
  if (kind == Kind::identity) return encoded;
  return std::pow(std::max(encoded, 0.0), gamma);
}

void BlurSpec::validate() const {
  if (n < 3 || n % 2 == 0) throw ValidationError("blur: n must be odd and >= 3, got " + std::to_string(n));
  int prev = 0;
  for (int o : offsets) {
    if (o <= 0 || o % 2 != 0)
      throw ValidationError("blur: offsets must be positive even integers, got " + std::to_string(o));
    if (o <= prev) throw ValidationError("blur: offsets must be strictly increasing");
    prev = o;
  }
  if (crf.kind == Crf::Kind::gamma && !(crf.gamma > 0.0))
    throw ValidationError("blur: gamma must be positive");
}

std::pair<int, int> BlurSpec::sample_range(int num_frames) const {
  const int half_n = n / 2;
  const int half_m = max_exposure() / 2;
  auto ceil_div = [](int a, int b) { return (a + b - 1) / b; };
  const int first = std::max(1 + ceil_div(half_n, n), ceil_div(half_m, n));
  const int last_in = (num_frames - 1 - half_n) / n - 1;
  const int last_tg = (num_frames - 1 - half_m) / n;
  const int last = num_frames - 1 - half_n < 0 ? -1 : std::min(last_in, last_tg);
  return {first, last};
}

int BlurSpec::min_sequence_length() const {
  const int t = sample_range(0).first;
  return std::max(n * (t + 1) + n / 2, n * t + max_exposure() / 2) + 1;
}

ExposureWindow exposure_window(int center, int m) { return {center - m / 2, center + m / 2}; }

Image synthesize_blur(const FrameSequence& seq, int center, int m, const Crf& crf) {
  if (m < 1 || m % 2 == 0) throw ValidationError("synthesize_blur: exposure must be odd, got " + std::to_string(m));
  const ExposureWindow w = exposure_window(center, m);
  if (w.first < 0 || w.last >= seq.size())
    throw RangeError("synthesize_blur: window [" + std::to_string(w.first) + ", " + std::to_string(w.last) +
                     "] outside sequence of " + std::to_string(seq.size()) + " frames");
  const Image& ref = seq.frames[static_cast<std::size_t>(center)];
  std::vector<double> acc(ref.pixels.size(), 0.0);
  for (int f = w.first; f <= w.last; ++f) {
    const Image& frame = seq.frames[static_cast<std::size_t>(f)];
    if (!frame.same_dims(ref)) throw ValidationError("synthesize_blur: frame dimensions differ");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += frame.pixels[i];
  }
  Image out(ref.width, ref.height, ref.channels);
  for (std::size_t i = 0; i < acc.size(); ++i) out.pixels[i] = static_cast<float>(crf.apply(acc[i] / m));
  return out;
}

std::vector<BlurSample> make_samples(const FrameSequence& seq, const BlurSpec& spec,
                                     const std::string& sequence_id) {
  spec.validate();
  const auto [first, last] = spec.sample_range(seq.size());
  if (first > last)
    throw DataError("make_samples: sequence has " + std::to_string(seq.size()) + " frames, needs at least " +
                    std::to_string(spec.min_sequence_length()));
  std::vector<BlurSample> samples;
  for (int t = first; t <= last; ++t) {
    BlurSample s;
    s.t = t;
    s.sequence_id = sequence_id;
    for (int k = 0; k < 3; ++k) s.inputs[static_cast<std::size_t>(k)] = synthesize_blur(seq, spec.n * (t - 1 + k), spec.n, spec.crf);
    s.sharp_gt = synthesize_blur(seq, spec.n * t, 1, spec.crf);
    for (int o : spec.offsets) s.more_blur_targets.push_back(synthesize_blur(seq, spec.n * t, spec.n + o, spec.crf));
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<NamedSequence> render_dataset_sequences(const DatasetSpec& spec) {
  std::vector<NamedSequence> out;
  const int total = spec.train_sequences + spec.test_sequences;
  for (int i = 0; i < total; ++i) {
    const bool train = i < spec.train_sequences;
    const SceneSpec scene = random_scene(spec.scene, spec.seed * 1000003ull + static_cast<std::uint64_t>(i));
    scene.validate(spec.blur.n, !spec.scene.static_scene);
    char id[32];
    std::snprintf(id, sizeof(id), "%s_%04d", train ? "train" : "test", train ? i : i - spec.train_sequences);
    out.push_back({id, train, render_sequence(scene)});
  }
  return out;
}

Dataset synthesize_dataset(const DatasetSpec& spec) {
  spec.blur.validate();
  Dataset data;
  data.blur = spec.blur;
  for (const auto& seq : render_dataset_sequences(spec)) {
    auto samples = make_samples(seq.frames, spec.blur, seq.id);
    auto& dst = seq.train ? data.train : data.test;
    std::move(samples.begin(), samples.end(), std::back_inserter(dst));
  }
  return data;
}

namespace {

std::string blur_name(int m, int t) { return "B" + std::to_string(m) + "_" + std::to_string(t) + ".png"; }

}  // namespace

void write_dataset(const fs::path& root, const Dataset& data) {
  fs::create_directories(root);
  nlohmann::json samples = nlohmann::json::array();
  auto emit = [&](const BlurSample& s, const char* split) {
    const fs::path seq = s.sequence_id.empty() ? fs::path("seq") : fs::path(s.sequence_id);
    nlohmann::json entry{{"sequence", seq.string()}, {"split", split}, {"t", s.t}};
    nlohmann::json inputs = nlohmann::json::array();
    for (int k = 0; k < 3; ++k) {
      const fs::path rel = seq / "input" / blur_name(data.blur.n, s.t - 1 + k);
      if (!fs::exists(root / rel)) write_png16(root / rel, s.inputs[static_cast<std::size_t>(k)]);
      inputs.push_back(rel.generic_string());
    }
    entry["inputs"] = inputs;
    const fs::path gt = seq / "gt" / ("sharp_" + std::to_string(s.t) + ".png");
    write_png16(root / gt, s.sharp_gt);
    entry["sharp_gt"] = gt.generic_string();
    nlohmann::json targets = nlohmann::json::array();
    for (std::size_t k = 0; k < s.more_blur_targets.size(); ++k) {
      const fs::path rel = seq / "targets" / blur_name(data.blur.n + data.blur.offsets[k], s.t);
      write_png16(root / rel, s.more_blur_targets[k]);
      targets.push_back(rel.generic_string());
    }
    entry["targets"] = targets;
    samples.push_back(entry);
  };
  for (const auto& s : data.train) emit(s, "train");
  for (const auto& s : data.test) emit(s, "test");
  nlohmann::json manifest{{"blur", data.blur}, {"samples", samples}};
  std::ofstream(root / "manifest.json") << manifest.dump(2) << "\n";
}

Dataset read_dataset(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("dataset manifest not found: " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed dataset manifest " + path.string() + ": " + e.what());
  }
  Dataset data;
  data.blur = manifest.at("blur").get<BlurSpec>();
  for (const auto& e : manifest.at("samples")) {
    BlurSample s;
    s.t = e.at("t").get<int>();
    s.sequence_id = e.at("sequence").get<std::string>();
    for (int k = 0; k < 3; ++k) s.inputs[static_cast<std::size_t>(k)] = read_image(root / e.at("inputs").at(k).get<std::string>());
    s.sharp_gt = read_image(root / e.at("sharp_gt").get<std::string>());
    for (const auto& t : e.at("targets")) s.more_blur_targets.push_back(read_image(root / t.get<std::string>()));
    if (s.more_blur_targets.size() != data.blur.offsets.size())
      throw DataError("sample " + s.sequence_id + "/" + std::to_string(s.t) + " has " +
                      std::to_string(s.more_blur_targets.size()) + " targets, expected " +
                      std::to_string(data.blur.offsets.size()));
    (e.at("split").get<std::string>() == "train" ? data.train : data.test).push_back(std::move(s));
  }
  return data;
}

void to_json(nlohmann::json& j, const Crf& c) {
  if (c.kind == Crf::Kind::identity)
    j = nlohmann::json{{"kind", "identity"}};
  else
    j = nlohmann::json{{"kind", "gamma"}, {"gamma", c.gamma}};
}

void from_json(const nlohmann::json& j, Crf& c) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") {
    c = Crf::identity();
  } else if (kind == "gamma") {
    c = Crf::gamma_curve(j.value("gamma", 2.2));
  } else {
    throw ConfigError("unknown crf kind '" + kind + "' (expected identity or gamma)");
  }
}

void to_json(nlohmann::json& j, const BlurSpec& s) {
  j = nlohmann::json{{"n", s.n}, {"offsets", s.offsets}, {"crf", s.crf}};
}

void from_json(const nlohmann::json& j, BlurSpec& s) {
  s.n = j.at("n").get<int>();
  s.offsets = j.at("offsets").get<std::vector<int>>();
  s.crf = j.at("crf").get<Crf>();
}

void to_json(nlohmann::json& j, const DatasetSpec& s) {
  j = nlohmann::json{{"scene", s.scene},
                     {"blur", s.blur},
                     {"train_sequences", s.train_sequences},
                     {"test_sequences", s.test_sequences},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, DatasetSpec& s) {
  s.scene = j.at("scene").get<RandomSceneParams>();
  s.blur = j.at("blur").get<BlurSpec>();
  s.train_sequences = j.at("train_sequences").get<int>();
  s.test_sequences = j.at("test_sequences").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace mb2d
